#pragma once

// JSONL event log. One JSON object per line, keys sorted, values either
// scalars or lowercase hex — so identical runs produce identical bytes and
// a log can be replayed without the code that wrote it.

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"

namespace rollsim {

using Json = nlohmann::json;

inline constexpr int kEventLogVersion = 1;

inline std::string to_hex(const Digest& d) { return d.hex(); }

inline Digest digest_from_hex(std::string_view hex) { return Digest::from_hex(hex); }

// Streams events as they happen; nothing is buffered, so even an aborted
// run leaves a usable prefix.
class EventLog {
  public:
    explicit EventLog(std::ostream* out = nullptr) : out_(out) {}

    void emit(const Json& event) {
        if (out_ == nullptr) return;
        (*out_) << event.dump() << '\n';
    }

    bool enabled() const { return out_ != nullptr; }

  private:
    std::ostream* out_;
};

inline std::vector<Json> read_event_log(std::istream& in) {
    std::vector<Json> events;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw std::runtime_error("log line " + std::to_string(lineno) + ": not valid JSON");
        if (!j.is_object() || !j.contains("ev"))
            throw std::runtime_error("log line " + std::to_string(lineno) + ": not an event");
        events.push_back(std::move(j));
    }
    return events;
}

}  // namespace rollsim
