#include "jsslab/rules.hpp"

#include <limits>
#include <stdexcept>

namespace jsslab {

RuleKind rule_from_string(const std::string& name) {
  if (name == "FIFO") return RuleKind::FIFO;
  if (name == "LOR") return RuleKind::LOR;
  if (name == "LWKR") return RuleKind::LWKR;
  if (name == "LPT") return RuleKind::LPT;
  if (name == "MOR") return RuleKind::MOR;
  if (name == "MWKR") return RuleKind::MWKR;
  if (name == "SPT") return RuleKind::SPT;
  if (name == "RANDOM") return RuleKind::RANDOM;
  throw std::invalid_argument("unknown dispatching rule: " + name);
}

std::string rule_name(RuleKind rule) {
  switch (rule) {
    case RuleKind::FIFO: return "FIFO";
    case RuleKind::LOR: return "LOR";
    case RuleKind::LWKR: return "LWKR";
    case RuleKind::LPT: return "LPT";
    case RuleKind::MOR: return "MOR";
    case RuleKind::MWKR: return "MWKR";
    case RuleKind::SPT: return "SPT";
    case RuleKind::RANDOM: return "RANDOM";
  }
  throw std::logic_error("rule_name: bad enum");
}

const std::vector<RuleKind>& all_rules() {
  static const std::vector<RuleKind> rules = {
      RuleKind::FIFO, RuleKind::LOR, RuleKind::LWKR, RuleKind::LPT,
      RuleKind::MOR,  RuleKind::MWKR, RuleKind::SPT};
  return rules;
}

int apply_rule(RuleKind rule, const SchedState& state,
               const std::vector<int>& eligible, Rng* rng) {
  if (eligible.empty()) throw std::invalid_argument("apply_rule: empty eligible set");
  if (rule == RuleKind::RANDOM) {
    if (rng == nullptr) throw std::invalid_argument("apply_rule: RANDOM needs an rng");
    return eligible[static_cast<std::size_t>(
        rng->uniform_int(0, static_cast<std::int64_t>(eligible.size()) - 1))];
  }

  // Lower key wins; max-rules negate. Ties fall through to (job, op).
  auto key = [&](int op) -> double {
    const Instance& inst = state.instance();
    int job = inst.job_of(op);
    switch (rule) {
      case RuleKind::FIFO: return static_cast<double>(state.ready_time(op));
      case RuleKind::SPT: return inst.op(op).proc_time;
      case RuleKind::LPT: return -static_cast<double>(inst.op(op).proc_time);
      case RuleKind::MOR: return -state.remaining_ops(job);
      case RuleKind::LOR: return state.remaining_ops(job);
      case RuleKind::MWKR: return -state.remaining_work(job);
      case RuleKind::LWKR: return state.remaining_work(job);
      default: break;
    }
    throw std::logic_error("apply_rule: bad enum");
  };

  int best = -1;
  double best_key = std::numeric_limits<double>::infinity();
  for (int op : eligible) {
    double k = key(op);
    if (best == -1 || k < best_key - 1e-12) {
      best = op;
      best_key = k;
    }
    // eligible is ascending by (job, op) already, so strict improvement only
  }
  return best;
}

}  // namespace jsslab
