#pragma once

// Convenience umbrella: the whole library in one include.

#include "rollsim/bytes.hpp"
#include "rollsim/digest.hpp"
#include "rollsim/merkle.hpp"
#include "rollsim/smt.hpp"
#include "rollsim/rng.hpp"
#include "rollsim/tx.hpp"
#include "rollsim/block.hpp"
#include "rollsim/ledger.hpp"
#include "rollsim/fraud.hpp"
#include "rollsim/bridge.hpp"
#include "rollsim/parent.hpp"
#include "rollsim/consensus.hpp"
#include "rollsim/faults.hpp"
#include "rollsim/da.hpp"
#include "rollsim/toml.hpp"
#include "rollsim/scenario.hpp"
#include "rollsim/eventlog.hpp"
#include "rollsim/harness.hpp"
