#include "commands.hpp"

#include "suite.hpp"

#include "degnse/control.hpp"
#include "degnse/hormander.hpp"
#include "degnse/parallel.hpp"
#include "degnse/rng.hpp"
#include "degnse/variational.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

namespace degnse::cli {

namespace {

// Seed stream labels, one per subcommand. Index 0 draws the initial data, 1.. the replicas.
enum Stream : std::uint64_t { kSimulate = 1, kCoupled, kMalliavin, kHormander, kControl };

SpectralField draw(int N, double w, std::uint64_t seed, double alpha) {
  std::mt19937_64 gen(seed);
  auto u = random_field(N, gen);
  return w > 0 ? (w / sobolev_norm(u, alpha)) * u : 0.0 * u;
}

nlohmann::json run_header(const RunContext& ctx) {
  return {{"config", ctx.cfg.canonical}, {"workers", ctx.workers}};
}

std::vector<double> field_row(double t, const SpectralField& u) {
  std::vector<double> r{t};
  r.insert(r.end(), u.coeffs().data(), u.coeffs().data() + u.coeffs().size());
  return r;
}

Eigen::MatrixXd stack(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) return {};
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (size_t i = 0; i < rows.size(); ++i) m.row(i) = Eigen::Map<const Eigen::RowVectorXd>(rows[i].data(), rows[i].size());
  return m;
}

nlohmann::json mode_json(const ModeIndex& k) { return {k.k1, k.k2, k.k3}; }

}  // namespace

int cmd_simulate(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& b = c.simulate;
  const auto x = draw(c.model.N_max, b.x_norm, split_seed(ctx.seed, kSimulate, 0), c.model.noise.w_alpha());
  SimulateOptions o;
  o.record_stride = b.record_stride;
  o.noise_stride = b.noise_stride;
  o.stop_at_exit = b.stop_at_exit;
  std::vector<Trajectory> runs(b.replicas);
  parallel_for(b.replicas, ctx.workers, [&](int r) {
    runs[r] = simulate(x, c.T, c.dt, split_seed(ctx.seed, kSimulate, r + 1), c.model, o);
  });

  std::vector<std::vector<double>> summary, norms;
  for (int r = 0; r < b.replicas; ++r) {
    const auto& tr = runs[r];
    const double wmax = *std::max_element(tr.w_norm.begin(), tr.w_norm.end());
    summary.push_back({double(r), tr.tau, tr.w_norm.back(), tr.h_norm.back(), wmax, double(tr.steps())});
    for (int n = 0; n <= tr.steps(); n += b.record_stride) norms.push_back({double(r), n * c.dt, tr.w_norm[n], tr.h_norm[n]});
  }
  ctx.out.csv("simulate_summary.csv", {"replica", "tau", "w_norm_T", "h_norm_T", "w_norm_max", "steps"}, summary);
  ctx.out.csv("simulate_norms.csv", {"replica", "t", "w_norm", "h_norm"}, norms);
  std::vector<std::vector<double>> states;
  for (size_t i = 0; i < runs[0].u.size(); ++i) states.push_back(field_row(runs[0].t[i], runs[0].u[i]));
  ctx.out.f64("simulate_states_r0.f64", stack(states));
  auto j = run_header(ctx);
  j["replicas"] = b.replicas;
  j["dim"] = x.coeffs().size();
  j["x_w_norm"] = sobolev_norm(x, c.model.noise.w_alpha());
  j["exits"] = std::count_if(runs.begin(), runs.end(), [](const Trajectory& t) { return t.tau != kNever; });
  ctx.out.json("simulate.json", j);
  return 0;
}

int cmd_coupled(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& b = c.coupled;
  const auto x = draw(c.model.N_max, b.x_norm, split_seed(ctx.seed, kCoupled, 0), c.model.noise.w_alpha());
  std::vector<CoupledReport> reps(b.replicas);
  parallel_for(b.replicas, ctx.workers, [&](int r) {
    reps[r] = coupled_weak_strong(x, c.T, c.dt, split_seed(ctx.seed, kCoupled, r + 1), c.model);
  });
  std::vector<std::vector<double>> rows;
  double worst = 0;
  for (int r = 0; r < b.replicas; ++r) {
    rows.push_back({double(r), reps[r].tau, reps[r].sup_before, reps[r].sup_after, double(reps[r].steps)});
    worst = std::max(worst, reps[r].sup_before);
  }
  ctx.out.csv("coupled.csv", {"replica", "tau", "sup_before", "sup_after", "steps"}, rows);
  auto j = run_header(ctx);
  j["replicas"] = b.replicas;
  j["max_sup_before"] = worst;
  ctx.out.json("coupled.json", j);
  return 0;
}

int cmd_malliavin(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& b = c.malliavin;
  const double a = c.model.noise.w_alpha();
  const auto x = draw(c.model.N_max, b.x_norm, split_seed(ctx.seed, kMalliavin, 0), a);
  const auto tail =
      lambda_min_tail(x, b.t, b.dt, b.replicas, split_seed(ctx.seed, kMalliavin, 1), c.model, b.eps_grid, b.q, ctx.workers);
  std::vector<std::vector<double>> lam, curve;
  for (size_t r = 0; r < tail.lambda_min.size(); ++r) lam.push_back({double(r), tail.lambda_min[r]});
  for (size_t i = 0; i < tail.eps.size(); ++i) curve.push_back({tail.eps[i], tail.prob[i]});
  ctx.out.csv("malliavin_lambda_min.csv", {"replica", "lambda_min"}, lam);
  ctx.out.csv("malliavin_tail.csv", {"eps", "prob"}, curve);

  // One representative path for the matrix dump and the dual-assembly gap.
  auto tr = simulate(x, b.t, b.dt, split_seed(ctx.seed, kMalliavin, 2), c.model);
  const auto fl = jacobian_flow(tr);
  const auto m = malliavin_matrix(tr, fl);
  ctx.out.f64("malliavin_matrix.f64", m.definition);
  auto j = run_header(ctx);
  j["q"] = tail.q;
  j["slope"] = tail.slope;
  j["M"] = fl.M;
  j["representative"] = {{"relative_gap", m.relative_gap},
                         {"symmetry_defect", m.symmetry_defect},
                         {"lambda_min", m.lambda_min},
                         {"lambda_max", m.lambda_max}};
  if (b.direction_delta > 0.0) {
    auto s = c.model;
    s.cutoff.delta = b.direction_delta;
    auto td = simulate(x, b.t, b.dt, split_seed(ctx.seed, kMalliavin, 3), s);
    const auto rep = malliavin_direction(td, jacobian_flow(td));
    j["direction"] = {{"delta", b.direction_delta},
                      {"high_residual", rep.high_residual},
                      {"jm_residual", rep.jm_residual}};
  }
  ctx.out.json("malliavin.json", j);
  return 0;
}

int cmd_hormander(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& b = c.hormander;
  const int N0 = c.model.noise.N0;
  const auto dec = decomposition_search(N0, b.N_limit);
  auto s = c.model;
  s.N = dec.N;
  s.N_max = std::max(s.N_max, dec.N);
  const int M = low_dimension(dec.N);
  const auto pairs = certificate_pairs(dec, s);

  nlohmann::json certs = nlohmann::json::array();
  for (const auto& p : dec.certificates)
    certs.push_back({{"k", mode_json(p.k)}, {"l", mode_json(p.l)}, {"m", mode_json(p.m)}, {"sign", p.sign}});

  // One ball per region, sized by ball_ratio * rho.
  const double rho = s.cutoff.rho, R = b.ball_ratio * rho, a = s.noise.w_alpha();
  const std::pair<int, double> centers[] = {{1, 2.0 * rho + 2.0 * R + 1.0}, {2, 0.5 * rho}, {3, 1.5 * rho}};
  SystemOptions o;
  o.pairs = pairs;
  std::vector<std::vector<double>> rows;
  bool full = true;
  for (const auto& [cs, w] : centers) {
    const auto x = draw(s.N_max, w, split_seed(ctx.seed, kHormander, cs), a);
    const auto mesh = ball_mesh(x, R, b.points, split_seed(ctx.seed, kHormander, 10 + cs), a);
    std::vector<SpanReport> reps(mesh.size());
    parallel_for(int(mesh.size()), ctx.workers, [&](int i) { reps[i] = span_rank(hormander_system(mesh[i], s, o), s); });
    for (size_t i = 0; i < mesh.size(); ++i) {
      const double wn = sobolev_norm(mesh[i], a);
      rows.push_back({double(cs), double(static_cast<int>(region_classify(wn, rho, 0.0))), double(i), wn,
                      double(reps[i].rank), double(M), reps[i].sigma_min, reps[i].sigma_max});
      full = full && reps[i].full();
    }
  }
  ctx.out.csv("hormander_span.csv", {"ball", "region", "point", "w_norm", "rank", "M", "sigma_min", "sigma_max"}, rows);

  const auto c3 = case3_perturbation_bound(s, b.case3_rhos, b.case3_ratio, pairs, b.case3_samples,
                                           split_seed(ctx.seed, kHormander, 20));
  std::vector<std::vector<double>> c3rows;
  for (size_t i = 0; i < c3.rho.size(); ++i) c3rows.push_back({c3.rho[i], c3.magnitude[i]});
  ctx.out.csv("hormander_case3.csv", {"rho", "magnitude"}, c3rows);

  auto j = run_header(ctx);
  j["N0"] = N0;
  j["N"] = dec.N;
  j["M"] = M;
  j["certificates"] = certs;
  j["all_full_rank"] = full;
  j["case3"] = {{"exponent", c3.exponent}, {"constant", c3.constant}};
  ctx.out.json("hormander.json", j);
  return 0;
}

int cmd_control(const RunContext& ctx) {
  const auto& c = ctx.cfg;
  const auto& b = c.control;
  const int N0 = c.model.noise.N0;
  const int level = b.carrier_N_max ? b.carrier_N_max : c.model.N_max;
  const int N_verify = b.N_verify ? b.N_verify : c.model.N_max + 2;
  CarrierSearchOptions co;
  co.seed = split_seed(ctx.seed, kControl, 0);
  const auto carriers = select_auxiliary_pairs(N0, level, co);
  const auto audit = audit_interactions(carriers);

  nlohmann::json cj = nlohmann::json::array();
  for (const auto& p : carriers.pairs)
    cj.push_back({{"k", mode_json(p.k)},
                  {"l", mode_json(p.l)},
                  {"m", mode_json(p.m)},
                  {"sign", p.sign},
                  {"constant", pair_constant(p.l, p.m)}});

  const double a = c.model.noise.w_alpha();
  std::vector<std::vector<double>> summary;
  for (int i = 0; i < b.pairs; ++i) {
    const auto x = draw(c.model.N_max, b.x_norm, split_seed(ctx.seed, kControl, 2 * i + 1), a);
    const auto y = draw(c.model.N_max, b.y_norm, split_seed(ctx.seed, kControl, 2 * i + 2), a);
    const auto plan = plan_control(x, y, c.T, b.eps, c.model, carriers);
    const auto replay = verify_control(plan, c.model.N_max, b.steps_per_phase);
    const auto check = verify_control(plan, N_verify, b.steps_per_phase);

    nlohmann::json defects = nlohmann::json::array();
    for (const auto& d : plan.defects()) defects.push_back({{"high", d.high}, {"low", d.low}, {"integration", d.integration}});
    auto j = run_header(ctx);
    j["pair"] = i;
    j["phases"] = {0.0, plan.T1(), plan.T2(), plan.T3(), plan.T()};
    j["eps"] = plan.eps();
    j["rho0"] = plan.rho0();
    j["bilinear_constant"] = plan.bilinear_constant();
    j["planned_miss"] = plan.planned_miss();
    j["replan_history"] = plan.replan_history();
    j["defects"] = defects;
    j["replay"] = {{"N", c.model.N_max}, {"miss", replay.miss}, {"sup_norm", replay.sup_norm}};
    j["verify"] = {{"N", N_verify}, {"miss", check.miss}, {"sup_norm", check.sup_norm}};
    j["carriers"] = {{"N_max", carriers.N_max}, {"method", carriers.method}, {"effort", carriers.effort}, {"pairs", cj}};
    j["audit"] = {{"checked", audit.checked}, {"intended", audit.intended}, {"forbidden", audit.forbidden}};
    ctx.out.json("control_plan_" + std::to_string(i) + ".json", j);

    // w samples: interior nodes of each phase, one row per sample (t, coefficients).
    const double bounds[] = {0.0, plan.T1(), plan.T2(), plan.T3(), plan.T()};
    std::vector<std::vector<double>> w;
    for (int ph = 0; ph < 4; ++ph)
      for (int k = 0; k < b.w_samples; ++k) {
        const double t = bounds[ph] + (bounds[ph + 1] - bounds[ph]) * (k + 0.5) / b.w_samples;
        w.push_back(field_row(t, plan.control(t, ph + 1)));
      }
    ctx.out.f64("control_w_" + std::to_string(i) + ".f64", stack(w));
    summary.push_back({double(i), plan.planned_miss(), replay.miss, check.miss, plan.rho0(), replay.sup_norm});
  }
  ctx.out.csv("control_summary.csv", {"pair", "planned_miss", "replay_miss", "verify_miss", "rho0", "sup_norm"},
              summary);
  return 0;
}

int cmd_verify_all(const RunContext& ctx) {
  SuiteOptions o;
  o.seed = ctx.seed;
  o.workers = ctx.workers;
  o.criteria = ctx.cfg.verify.criteria;
  const auto results = run_suite(o, [](const CriterionResult& r) {
    std::printf("%s\n", r.line().c_str());
    std::fflush(stdout);
  });
  nlohmann::json arr = nlohmann::json::array();
  std::vector<std::vector<double>> rows;
  for (size_t i = 0; i < results.size(); ++i) {
    const auto& r = results[i];
    arr.push_back({{"id", r.id},
                   {"title", r.title},
                   {"pass", r.pass},
                   {"gating", r.gating},
                   {"measured", r.measured},
                   {"seconds", r.seconds},
                   {"detail", r.detail}});
    rows.push_back({double(i), r.pass ? 1.0 : 0.0, r.gating ? 1.0 : 0.0, r.seconds});
  }
  const bool ok = suite_passed(results);
  auto j = run_header(ctx);
  j["criteria"] = arr;
  j["passed"] = ok;
  ctx.out.json("verify.json", j);
  ctx.out.csv("verify.csv", {"index", "pass", "gating", "seconds"}, rows);
  std::printf("verify-all: %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 3;
}

}  // namespace degnse::cli
