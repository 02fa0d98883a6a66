#pragma once

#include <string>
#include <vector>

#include "jsslab/engine.hpp"

namespace jsslab {

enum class RuleKind { FIFO, LOR, LWKR, LPT, MOR, MWKR, SPT, RANDOM };

RuleKind rule_from_string(const std::string& name);
std::string rule_name(RuleKind rule);
const std::vector<RuleKind>& all_rules();  // the seven PDRs, without RANDOM

// Selects one eligible op. Ties break by (job_id, op_id), ascending. rng is
// only consulted for RANDOM.
int apply_rule(RuleKind rule, const SchedState& state,
               const std::vector<int>& eligible, Rng* rng = nullptr);

}  // namespace jsslab
