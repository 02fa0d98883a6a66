#include <doctest.h>

#include "fixtures.hpp"
#include "jsslab/rules.hpp"

using namespace jsslab;

namespace {

std::vector<int> rule_order(const Instance& inst, RuleKind rule) {
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  std::vector<int> order;
  while (!s.terminal()) {
    int op = apply_rule(rule, s, s.eligible_actions());
    order.push_back(op);
    s.step(op);
  }
  return order;
}

}  // namespace

TEST_CASE("SPT order on t1") {
  // O21 (proc 2) before O11 (proc 3); then O12 (2) before O22 (4)
  CHECK(rule_order(testfix::make_t1(), RuleKind::SPT) ==
        std::vector<int>{2, 0, 1, 3});
}

TEST_CASE("MWKR order on t1") {
  // initial remaining work: job 1 has 6 > job 0 with 5
  CHECK(rule_order(testfix::make_t1(), RuleKind::MWKR) ==
        std::vector<int>{2, 0, 3, 1});
}

TEST_CASE("LWKR order on t1") {
  CHECK(rule_order(testfix::make_t1(), RuleKind::LWKR) ==
        std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("LPT picks the longest eligible op") {
  Instance inst = testfix::make_t1();
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  CHECK(apply_rule(RuleKind::LPT, s, s.eligible_actions()) == 0);
}

TEST_CASE("FIFO breaks the all-ready tie by job order") {
  Instance inst = testfix::make_t1();
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  CHECK(apply_rule(RuleKind::FIFO, s, s.eligible_actions()) == 0);
  // after dispatching both firsts, op 1 became ready at t=3, op 3 at t=2
  s.step(0);
  s.step(2);
  CHECK(apply_rule(RuleKind::FIFO, s, s.eligible_actions()) == 3);
}

TEST_CASE("MOR and LOR disagree once op counts differ") {
  Instance inst = testfix::make_branchy(0.5);
  // single job: both rules must return the only eligible op
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  CHECK(apply_rule(RuleKind::MOR, s, s.eligible_actions()) == 0);
  CHECK(apply_rule(RuleKind::LOR, s, s.eligible_actions()) == 0);
}

TEST_CASE("RANDOM requires an rng and stays within the eligible set") {
  Instance inst = testfix::make_t1();
  SchedState s = SchedState::reset(inst, Mode::Stochastic);
  auto elig = s.eligible_actions();
  CHECK_THROWS(apply_rule(RuleKind::RANDOM, s, elig));
  Rng rng(4);
  for (int i = 0; i < 20; ++i) {
    int op = apply_rule(RuleKind::RANDOM, s, elig, &rng);
    CHECK((op == 0 || op == 2));
  }
}

TEST_CASE("rule names round trip") {
  for (RuleKind rule : all_rules()) CHECK(rule_from_string(rule_name(rule)) == rule);
  CHECK(rule_from_string("RANDOM") == RuleKind::RANDOM);
  CHECK(all_rules().size() == 7);
  CHECK_THROWS(rule_from_string("EDD"));
}

TEST_CASE("deterministic rules are deterministic") {
  Instance inst = generate_instance(3, 4, 1, 77);
  for (RuleKind rule : all_rules()) {
    Rng a(5), b(5);
    CHECK(testfix::run_rule_episode(inst, rule, a) ==
          testfix::run_rule_episode(inst, rule, b));
  }
}
