#include <doctest.h>

#include <algorithm>
#include <set>

#include "fixtures.hpp"
#include "jsslab/instance.hpp"

using namespace jsslab;

TEST_CASE("t1 fixture structure") {
  Instance inst = testfix::make_t1();
  CHECK(inst.total_ops() == 4);
  CHECK(inst.op(0).proc_time == 3);
  CHECK(inst.op(3).machine_id == 0);
  CHECK(inst.job_of(2) == 1);
  CHECK(inst.jobs[0].source_op == 0);
  CHECK(inst.jobs[1].source_op == 2);
  CHECK(inst.jobs[0].sinks == std::vector<int>{1});
}

TEST_CASE("generated 3x4x1 instance has 6 ops per job and 8 scenarios") {
  Instance inst = generate_instance(3, 4, 1, 7);
  CHECK(inst.n_jobs == 3);
  for (const auto& job : inst.jobs) CHECK(job.ops.size() == 6);

  auto scens = enumerate_scenarios(inst);
  CHECK(scens.size() == 8);  // 2 paths per job, 3 jobs
  double total = 0.0;
  for (const auto& s : scens) total += s.probability;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("every realized path covers each machine exactly once") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (auto [nj, nm, nb] : {std::tuple{2, 4, 1}, {3, 8, 2}, {4, 5, 0}}) {
      Instance inst = generate_instance(nj, nm, nb, seed);
      for (const auto& scen : enumerate_scenarios(inst)) {
        for (const auto& path : scen.realized_path) {
          std::multiset<int> machines;
          for (int op : path) machines.insert(inst.op(op).machine_id);
          CHECK(machines.size() == static_cast<std::size_t>(nm));
          CHECK(*machines.rbegin() == nm - 1);
          CHECK(std::set<int>(machines.begin(), machines.end()).size() ==
                static_cast<std::size_t>(nm));
        }
      }
    }
  }
}

TEST_CASE("generation is bit-reproducible per seed") {
  std::string a = instance_to_json(generate_instance(4, 6, 1, 99));
  std::string b = instance_to_json(generate_instance(4, 6, 1, 99));
  std::string c = instance_to_json(generate_instance(4, 6, 1, 100));
  CHECK(a == b);
  CHECK(a != c);
}

TEST_CASE("instance json round trip is byte-identical") {
  Instance inst = generate_instance(3, 8, 2, 5);
  std::string once = instance_to_json(inst);
  std::string twice = instance_to_json(instance_from_json(once));
  CHECK(once == twice);
}

TEST_CASE("scenario json round trip") {
  Instance inst = generate_instance(2, 4, 1, 11);
  Rng rng(3);
  Scenario scen = sample_scenario(inst, rng);
  auto [inst2, scen2] = scenario_from_json(scenario_to_json(inst, scen));
  CHECK(scen2.realized_path == scen.realized_path);
  CHECK(scen2.branch_choices == scen.branch_choices);
  CHECK(scen2.probability == doctest::Approx(scen.probability));
  CHECK(instance_to_json(inst2) == instance_to_json(inst));
}

TEST_CASE("degenerate branch probability forces the first alternative") {
  Instance inst = testfix::make_branchy(1.0);
  Rng rng(42);
  for (int i = 0; i < 20; ++i) {
    Scenario s = sample_scenario(inst, rng);
    CHECK(s.branch_choices.at(0) == 1);
    CHECK(s.probability == 1.0);
  }
  auto scens = enumerate_scenarios(inst);
  REQUIRE(scens.size() == 2);
  double high = std::max(scens[0].probability, scens[1].probability);
  double low = std::min(scens[0].probability, scens[1].probability);
  CHECK(high == 1.0);
  CHECK(low == 0.0);
}

TEST_CASE("sampled scenarios are always in the enumerated set") {
  Instance inst = generate_instance(2, 8, 2, 21);
  auto scens = enumerate_scenarios(inst);
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    Scenario s = sample_scenario(inst, rng);
    bool found = false;
    for (const auto& e : scens)
      found = found || e.realized_path == s.realized_path;
    CHECK(found);
  }
}

TEST_CASE("generator rejects invalid dimensions") {
  CHECK_THROWS(generate_instance(0, 4, 0, 1));
  CHECK_THROWS(generate_instance(2, 1, 0, 1));
  CHECK_THROWS(generate_instance(2, 4, 2, 1));  // n_branch > n_machines / 4
  CHECK_THROWS(generate_instance(2, 4, 1, 1, -0.1));
}

TEST_CASE("enumerate_scenarios honors the cap") {
  Instance inst = generate_instance(4, 8, 2, 2);  // 4^4 = 256 scenarios
  CHECK(enumerate_scenarios(inst, 4096).size() == 256);
  CHECK_THROWS(enumerate_scenarios(inst, 100));
}

TEST_CASE("finalize rejects malformed jobs") {
  Instance inst = testfix::make_t1();
  inst.jobs[0].edges.push_back({1, 0, 1.0});  // cycle
  CHECK_THROWS(inst.finalize());

  Instance inst2 = testfix::make_t1();
  inst2.jobs[0].edges[0].prob = 0.5;  // probabilities no longer sum to 1
  CHECK_THROWS(inst2.finalize());

  Instance inst3 = testfix::make_t1();
  inst3.jobs[0].ops[1].proc_time = 0;
  CHECK_THROWS(inst3.finalize());
}
