#include "jsslab/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "jsslab/solver.hpp"

namespace jsslab {

double cvar(const std::vector<double>& makespans, double alpha) {
  if (makespans.empty()) throw std::invalid_argument("cvar: empty sample");
  if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("cvar: alpha out of (0, 1]");
  std::vector<double> sorted = makespans;
  std::sort(sorted.rbegin(), sorted.rend());
  std::size_t k = static_cast<std::size_t>(
      std::ceil(alpha * static_cast<double>(sorted.size())) + 0.5);
  k = std::max<std::size_t>(1, std::min(k, sorted.size()));
  double acc = 0.0;
  for (std::size_t i = 0; i < k; ++i) acc += sorted[i];
  return acc / static_cast<double>(k);
}

double cvar(const std::vector<long long>& makespans, double alpha) {
  std::vector<double> xs(makespans.begin(), makespans.end());
  return cvar(xs, alpha);
}

double gap_pct(double value, double reference) {
  if (reference <= 0.0) throw std::invalid_argument("gap_pct: reference must be positive");
  return 100.0 * (value - reference) / reference;
}

void ModelPolicy::begin_instance(const Instance& inst, std::uint64_t seed) {
  if (use_upm_) {
    Rng rng(child_seed(seed, "upm"));
    z_ = Tensor::constant(model_->upm_forward(inst, rng).val());
  } else {
    z_ = Tensor();
  }
}

int ModelPolicy::choose(const SchedState& state, const std::vector<int>& eligible, Rng&) {
  DisjunctiveView view = state.disjunctive_view();
  Tensor probs = model_->actor_probs(view, z_);
  const Mat& p = probs.val();
  int chosen = -1;
  double best = -1.0;
  for (int i = 0; i < view.n(); ++i)
    if (view.ready(i) && p(0, i) > best) {
      best = p(0, i);
      chosen = i;
    }
  return view.ops[chosen];
}

std::vector<EvalRow> evaluate_policies(
    const std::vector<std::pair<std::string, EpisodePolicy*>>& policies,
    const std::vector<std::pair<std::string, const Instance*>>& instances,
    const EvalOptions& opts) {
  std::vector<EvalRow> rows;
  for (const auto& [iid, inst] : instances) {
    bool exact = inst->n_jobs <= opts.exact_max_jobs &&
                 inst->n_machines <= opts.exact_max_machines;
    long long best_found = std::numeric_limits<long long>::max();
    std::vector<std::size_t> row_idx;
    for (const auto& [pname, policy] : policies) {
      EvalRow row;
      row.instance_id = iid;
      row.policy = pname;
      policy->begin_instance(*inst, child_seed(opts.seed, "eval/" + iid + "/" + pname));
      double opt_sum = 0.0;
      for (int r = 0; r < opts.runs; ++r) {
        Rng rng(opts.seed + static_cast<std::uint64_t>(r));
        SchedState state = SchedState::reset(*inst, Mode::Stochastic);
        while (!state.terminal()) {
          auto eligible = state.eligible_actions();
          state.step(policy->choose(state, eligible, rng), &rng);
        }
        long long mk = state.makespan();
        row.makespans.push_back(mk);
        best_found = std::min(best_found, mk);
        if (exact) {
          Scenario scen = state.realized_scenario();
          opt_sum += static_cast<double>(solve_optimal(*inst, scen).optimum);
        }
      }
      double avg = 0.0;
      for (long long m : row.makespans) avg += static_cast<double>(m);
      avg /= static_cast<double>(row.makespans.size());
      row.avg = avg;
      row.cvar = cvar(row.makespans, opts.alpha);
      if (exact) {
        row.reference = opt_sum / static_cast<double>(opts.runs);
        row.reference_kind = "optimal";
        row.gap_pct = gap_pct(row.avg, row.reference);
      }
      row_idx.push_back(rows.size());
      rows.push_back(std::move(row));
    }
    if (!exact) {
      for (std::size_t i : row_idx) {
        rows[i].reference = static_cast<double>(best_found);
        rows[i].reference_kind = "best-found";
        rows[i].gap_pct = gap_pct(rows[i].avg, rows[i].reference);
      }
    }
  }
  return rows;
}

namespace {

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", x);
  return buf;
}

}  // namespace

std::string results_csv(const std::vector<EvalRow>& rows) {
  std::ostringstream out;
  out << "instance_id,policy,avg,cvar,gap_pct,reference,reference_kind\n";
  for (const auto& r : rows)
    out << r.instance_id << ',' << r.policy << ',' << fmt(r.avg) << ',' << fmt(r.cvar)
        << ',' << fmt(r.gap_pct) << ',' << fmt(r.reference) << ',' << r.reference_kind
        << '\n';
  return out.str();
}

std::string ablation_csv(
    const std::vector<std::pair<std::string, std::vector<EvalRow>>>& per_mode_rows,
    const std::vector<std::string>& set_names) {
  std::ostringstream out;
  out << "method";
  for (const auto& s : set_names) out << ',' << s << "_avg," << s << "_cvar";
  out << '\n';
  for (const auto& [mode, rows] : per_mode_rows) {
    out << mode;
    for (const auto& set : set_names) {
      double avg = 0.0, cv = 0.0;
      int n = 0;
      for (const auto& r : rows)
        if (r.instance_id.rfind(set, 0) == 0) {
          avg += r.avg;
          cv += r.cvar;
          ++n;
        }
      if (n == 0) throw std::invalid_argument("ablation_csv: no rows for set " + set);
      out << ',' << fmt(avg / n) << ',' << fmt(cv / n);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace jsslab
