#include "degnse/variational.hpp"

#include "degnse/nonlinearity.hpp"
#include "degnse/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>

namespace degnse {

std::vector<int> window_components(const Truncation& t, int N) {
  std::vector<int> out;
  for (int j = 0; j < t.size(); ++j)
    if (t.sup_norm(j) <= N) {
      out.push_back(2 * j);
      out.push_back(2 * j + 1);
    }
  return out;
}

namespace {

int resolve(int N, const SpectralField& u) { return N <= 0 ? u.N_max() : N; }

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<int>& idx) {
  Eigen::VectorXd out(idx.size());
  for (size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

// W-gradient of |u|_W restricted to the given components.
Eigen::VectorXd w_gradient(const SpectralField& u, double r, const Eigen::VectorXd& w, const std::vector<int>& cols) {
  Eigen::VectorXd n(cols.size());
  for (size_t i = 0; i < cols.size(); ++i) n[i] = w[cols[i]] * u.coeffs()[cols[i]] / r;
  return n;
}

// Stokes weights and low-noise derivative pieces shared by the flow integrators.
struct Frame {
  std::vector<int> rows, cols;
  Eigen::VectorXd E, phi, w;
};

Frame make_frame(const Truncation& t, double dt, double alpha, int N_rows, int N_cols) {
  Frame f{window_components(t, N_rows), window_components(t, N_cols), {}, {}, sobolev_weights(t, alpha)};
  f.E.resize(f.rows.size());
  f.phi.resize(f.rows.size());
  for (size_t i = 0; i < f.rows.size(); ++i) {
    double a = t.norm2(f.rows[i] / 2);
    f.E[i] = std::exp(-a * dt);
    f.phi[i] = -std::expm1(-a * dt) / a;
  }
  return f;
}

}  // namespace

Eigen::MatrixXd drift_jacobian(const SpectralField& u, const ModelSpec& spec, int N_rows, int N_cols) {
  N_rows = resolve(N_rows, u);
  N_cols = resolve(N_cols, u);
  const auto& t = u.trunc();
  const auto rows = window_components(t, N_rows), cols = window_components(t, N_cols);
  Eigen::MatrixXd DF = Eigen::MatrixXd::Zero(rows.size(), cols.size());
  const double alpha = spec.noise.w_alpha();
  const double r = sobolev_norm(u, alpha);
  double c = 1.0, cp = 0.0;
  if (spec.use_cutoff) {
    c = chi(r / (3.0 * spec.cutoff.rho));
    cp = chi_prime(r / (3.0 * spec.cutoff.rho));
  }
  if (c == 0.0 && cp == 0.0) return DF;
  if (c != 0.0) {
    Eigen::MatrixXd JB = convective_jacobian(u, N_rows);
    for (size_t j = 0; j < cols.size(); ++j) DF.col(j) = -c * JB.col(cols[j]);
  }
  if (cp != 0.0 && r > 0.0) {
    Eigen::VectorXd B = convective_term(u, N_rows).coeffs();
    Eigen::VectorXd n = w_gradient(u, r, sobolev_weights(t, alpha), cols);
    DF.noalias() -= (cp / (3.0 * spec.cutoff.rho)) * B * n.transpose();
  }
  if (spec.use_cutoff && spec.cutoff.delta > 0.0)
    for (size_t i = 0; i < rows.size(); ++i) {
      int j = rows[i] / 2;
      if (t.sup_norm(j) > spec.N) DF.row(i) *= std::exp(-t.norm2(j) * spec.cutoff.delta);
    }
  return DF;
}

Eigen::MatrixXd step_jacobian(const SpectralField& u, double dt, const Eigen::VectorXd& dW, const ModelSpec& spec,
                              int N_rows, int N_cols) {
  N_rows = resolve(N_rows, u);
  N_cols = resolve(N_cols, u);
  const auto& t = u.trunc();
  const double alpha = spec.noise.w_alpha();
  Frame f = make_frame(t, dt, alpha, N_rows, N_cols);
  Eigen::MatrixXd S = f.phi.asDiagonal() * drift_jacobian(u, spec, N_rows, N_cols);
  // rows and cols are both prefixes of the same ordering, so diagonal entries align
  for (size_t i = 0; i < std::min(f.rows.size(), f.cols.size()); ++i) S(i, i) += f.E[i];
  if (!spec.use_cutoff) return S;
  const double r = sobolev_norm(u, alpha);
  const double cq = r > 0.0 ? chi_prime(r / spec.cutoff.rho) : 0.0;
  if (cq == 0.0) return S;
  Eigen::VectorXd n = w_gradient(u, r, f.w, f.cols);
  for (size_t i = 0; i < f.rows.size(); ++i) {
    const ModeIndex& k = t.mode(f.rows[i] / 2);
    double qb = spec.noise.q_bar(k);
    if (qb == 0.0) continue;
    S.row(i) += (f.E[i] * dW[f.rows[i]] * qb * (-cq / spec.cutoff.rho)) * n.transpose();
  }
  return S;
}

FlowMatrices jacobian_flow(const Trajectory& traj, const FlowOptions& opts) {
  if (traj.record_stride != 1) throw std::invalid_argument("jacobian_flow: trajectory must record every step");
  const auto& spec = traj.spec;
  FlowMatrices fl;
  fl.N = spec.N;
  fl.dt = traj.dt;
  fl.record_stride = opts.record_stride;
  const auto t = Truncation::get(spec.N_max);
  fl.M = static_cast<int>(window_components(*t, spec.N).size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Identity(fl.M, fl.M), Ji = J;
  auto record = [&](int n) {
    if (n % opts.record_stride) return;
    fl.t.push_back(n * traj.dt);
    fl.J.push_back(J);
    fl.Jinv.push_back(Ji);
  };
  record(0);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(fl.M, fl.M);
  for (int n = 0; n < traj.steps(); ++n) {
    Eigen::MatrixXd S = step_jacobian(traj.u[n], traj.dt, traj.increment(n), spec, spec.N, spec.N);
    J = S * J;
    Ji = S.transpose().partialPivLu().solve(Ji.transpose()).transpose();
    if (!J.allFinite() || !Ji.allFinite()) throw NumericalFailure("jacobian_flow", (n + 1) * traj.dt);
    fl.identity_residual.push_back((J * Ji - I).norm());
    record(n + 1);
  }
  return fl;
}

std::vector<Eigen::MatrixXd> inverse_flow_ito(const Trajectory& traj, double trace_sign) {
  if (traj.record_stride != 1) throw std::invalid_argument("inverse_flow_ito: trajectory must record every step");
  const auto& spec = traj.spec;
  const auto t = Truncation::get(spec.N_max);
  const auto low = window_components(*t, spec.N);
  const int M = static_cast<int>(low.size());
  const Eigen::VectorXd w = sobolev_weights(*t, spec.noise.w_alpha());
  Eigen::VectorXd Ad(M);
  for (int i = 0; i < M; ++i) Ad[i] = t->norm2(low[i] / 2);
  Eigen::MatrixXd Y = Eigen::MatrixXd::Identity(M, M);
  std::vector<Eigen::MatrixXd> out{Y};
  const double dt = traj.dt;
  for (int n = 0; n < traj.steps(); ++n) {
    const SpectralField& u = traj.u[n];
    Eigen::MatrixXd G = drift_jacobian(u, spec, spec.N, spec.N);  // D_L of the nonlinear drift
    Eigen::MatrixXd K = -G;
    K.diagonal() += Ad;
    const double r = sobolev_norm(u, spec.noise.w_alpha());
    const double c = (spec.use_cutoff && r > 0.0) ? -chi_prime(r / spec.cutoff.rho) / spec.cutoff.rho : 0.0;
    Eigen::MatrixXd step = K * dt;
    if (c != 0.0) {
      Eigen::VectorXd dW = traj.increment(n);
      Eigen::VectorXd nv = w_gradient(u, r, w, low);
      Eigen::VectorXd sig(M), sig2(M);
      for (int i = 0; i < M; ++i) {
        double qb = spec.noise.q_bar(t->mode(low[i] / 2));
        sig[i] = c * qb * dW[low[i]];
        sig2[i] = c * c * qb * qb * nv[i];
      }
      step.noalias() += (trace_sign * dt) * sig2 * nv.transpose();
      step.noalias() -= sig * nv.transpose();
    }
    Y = Y + Y * step;
    if (!Y.allFinite()) throw NumericalFailure("inverse_flow_ito", (n + 1) * dt);
    out.push_back(Y);
  }
  return out;
}

std::vector<SpectralField> frechet_flow(const Trajectory& traj, const SpectralField& h) {
  if (traj.record_stride != 1) throw std::invalid_argument("frechet_flow: trajectory must record every step");
  if (h.N_max() != traj.spec.N_max) throw std::invalid_argument("frechet_flow: direction truncation mismatch");
  std::vector<SpectralField> out{h};
  Eigen::VectorXd d = h.coeffs();
  for (int n = 0; n < traj.steps(); ++n) {
    if (d.isZero(0.0)) {
      out.push_back(SpectralField::zero_like(h));
      continue;
    }
    d = step_jacobian(traj.u[n], traj.dt, traj.increment(n), traj.spec) * d;
    if (!d.allFinite()) throw NumericalFailure("frechet_flow", (n + 1) * traj.dt);
    out.emplace_back(h.trunc_ptr(), d);
  }
  return out;
}

namespace {

// Per-step pieces of the discrete noise-to-state map: a_n = Jinv_{n+1} E_L diag(amp_L(Phi_n)).
struct NoiseFrame {
  std::vector<int> low;
  Eigen::VectorXd D, E;  // W weights and Stokes factors on low components
};

NoiseFrame noise_frame(const Trajectory& traj) {
  const auto t = Truncation::get(traj.spec.N_max);
  NoiseFrame nf{window_components(*t, traj.spec.N), {}, {}};
  const Eigen::VectorXd w = sobolev_weights(*t, traj.spec.noise.w_alpha());
  nf.D = gather(w, nf.low);
  nf.E.resize(nf.low.size());
  for (size_t i = 0; i < nf.low.size(); ++i) nf.E[i] = std::exp(-t->norm2(nf.low[i] / 2) * traj.dt);
  return nf;
}

Eigen::VectorXd low_amplitudes(const Trajectory& traj, const NoiseFrame& nf, int n) {
  const auto t = Truncation::get(traj.spec.N_max);
  Eigen::VectorXd amp = traj.spec.use_cutoff ? state_covariance_at(traj.w_norm[n], *t, traj.spec)
                                             : q_diag(*t, traj.spec.noise);
  return gather(amp, nf.low);
}

}  // namespace

MalliavinMatrix malliavin_matrix(const Trajectory& traj, const FlowMatrices& flows, int n_steps) {
  if (flows.record_stride != 1) throw std::invalid_argument("malliavin_matrix: flows must be recorded every step");
  if (n_steps < 0) n_steps = traj.steps();
  const NoiseFrame nf = noise_frame(traj);
  const int M = flows.M;
  const Eigen::VectorXd sD = nf.D.cwiseSqrt();
  MalliavinMatrix mm;
  mm.t = n_steps * traj.dt;
  mm.definition = Eigen::MatrixXd::Zero(M, M);
  mm.representation = Eigen::MatrixXd::Zero(M, M);
  for (int n = 0; n < n_steps; ++n) {
    Eigen::VectorXd amp = low_amplitudes(traj, nf, n).cwiseProduct(nf.E);
    if (amp.isZero(0.0)) continue;
    // a = Jinv_{n+1} E diag(amp); G = D^{1/2} a D^{-1/2}
    Eigen::MatrixXd a = flows.Jinv[n + 1] * amp.asDiagonal();
    Eigen::MatrixXd G = sD.asDiagonal() * a * sD.cwiseInverse().asDiagonal();
    mm.definition.noalias() += traj.dt * G * G.transpose();
    for (int j = 0; j < M; ++j) {
      if (amp[j] == 0.0) continue;
      Eigen::VectorXd col = sD.cwiseProduct(a.col(j));
      mm.representation.noalias() += (traj.dt / nf.D[j]) * col * col.transpose();
    }
  }
  const double scale = std::max(mm.definition.norm(), 1e-300);
  mm.relative_gap = (mm.definition - mm.representation).norm() / scale;
  mm.symmetry_defect = (mm.definition - mm.definition.transpose()).norm() / scale;
  if (n_steps > 0) {
    Eigen::MatrixXd sym = 0.5 * (mm.definition + mm.definition.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym, Eigen::EigenvaluesOnly);
    mm.lambda_min = es.eigenvalues()[0];
    mm.lambda_max = es.eigenvalues()[M - 1];
  }
  return mm;
}

DirectionReport malliavin_direction(const Trajectory& traj, const FlowMatrices& flows, bool zero_low) {
  const auto& spec = traj.spec;
  if (!(spec.cutoff.delta > 0.0)) throw std::invalid_argument("malliavin_direction: requires delta > 0");
  if (flows.record_stride != 1) throw std::invalid_argument("malliavin_direction: flows must be recorded every step");
  const auto t = Truncation::get(spec.N_max);
  const NoiseFrame nf = noise_frame(traj);
  const int M = flows.M, dim = t->dim();
  std::vector<int> high;
  for (int i = 0; i < dim; ++i)
    if (t->sup_norm(i / 2) > spec.N) high.push_back(i);
  const int H = static_cast<int>(high.size());
  Eigen::VectorXd qH(H), eH(H), phiH(H);
  for (int i = 0; i < H; ++i) {
    double a = t->norm2(high[i] / 2);
    qH[i] = spec.noise.q(t->mode(high[i] / 2));
    eH[i] = std::exp(-a * traj.dt);
    phiH[i] = -std::expm1(-a * traj.dt) / a;
  }
  // full state ordering: low components first in storage order, then high
  std::vector<int> order = nf.low;
  order.insert(order.end(), high.begin(), high.end());

  Eigen::MatrixXd Dv = Eigen::MatrixXd::Zero(dim, M);  // rows in `order`
  Eigen::MatrixXd Mraw = Eigen::MatrixXd::Zero(M, M);
  DirectionReport rep;
  const double dt = traj.dt;
  for (int n = 0; n < traj.steps(); ++n) {
    Eigen::MatrixXd Sfull = step_jacobian(traj.u[n], dt, traj.increment(n), spec);
    Eigen::MatrixXd S(dim, dim);
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) S(i, j) = Sfull(order[i], order[j]);
    Eigen::VectorXd ampE = low_amplitudes(traj, nf, n).cwiseProduct(nf.E);
    Eigen::MatrixXd a = flows.Jinv[n + 1] * ampE.asDiagonal();
    // v^L = a^* in the W inner product: D^{-1} a^T D
    Eigen::MatrixXd vL = nf.D.cwiseInverse().asDiagonal() * a.transpose() * nf.D.asDiagonal();
    if (zero_low) vL.setZero();
    // high control cancels the low-to-high response: E_H Q_H v^H dt = -S_HL D^L
    Eigen::MatrixXd resp = S.bottomLeftCorner(H, M) * Dv.topRows(M);
    Eigen::VectorXd gain = -(eH.cwiseProduct(qH) * dt).cwiseInverse();
    Eigen::MatrixXd vH = gain.asDiagonal() * resp;
    Eigen::MatrixXd next = S * Dv;
    next.topRows(M).noalias() += dt * ampE.asDiagonal() * vL;
    next.bottomRows(H).noalias() += dt * (eH.cwiseProduct(qH)).asDiagonal() * vH;
    Dv = std::move(next);
    Mraw.noalias() += dt * a * vL;
    if (!Dv.allFinite()) throw NumericalFailure("malliavin_direction", (n + 1) * dt);
    const double nl = Dv.topRows(M).norm();
    if (nl > 0.0) rep.high_residual = std::max(rep.high_residual, Dv.bottomRows(H).norm() / nl);
    Eigen::MatrixXd JM = flows.J[n + 1] * Mraw;
    const double nj = JM.norm();
    if (nj > 0.0) rep.jm_residual = std::max(rep.jm_residual, (Dv.topRows(M) - JM).norm() / nj);
    else rep.jm_residual = std::max(rep.jm_residual, Dv.topRows(M).norm());
  }
  rep.DL_final = Dv.topRows(M);
  return rep;
}

TailCurve lambda_min_tail(const SpectralField& x, double t, double dt, int replicas, std::uint64_t seed,
                          const ModelSpec& spec, const std::vector<double>& eps_grid, double q, int workers) {
  if (!(t > 0.0)) throw std::invalid_argument("lambda_min_tail: t must be positive");
  TailCurve tc;
  tc.q = q;
  tc.lambda_min.assign(replicas, 0.0);
  parallel_for(replicas, workers, [&](int r) {
    auto traj = simulate(x, t, dt, split_seed(seed, 0x6c6d696e, r), spec);
    auto fl = jacobian_flow(traj);
    tc.lambda_min[r] = malliavin_matrix(traj, fl).lambda_min;
  });
  std::vector<double> lx, ly;
  for (double e : eps_grid) {
    const double thr = std::pow(e, q);
    int c = 0;
    for (double l : tc.lambda_min) c += l <= thr;
    double p = replicas ? static_cast<double>(c) / replicas : 0.0;
    tc.eps.push_back(e);
    tc.prob.push_back(p);
    if (p > 0.0) {
      lx.push_back(std::log(e));
      ly.push_back(std::log(p));
    }
  }
  if (lx.size() >= 2) {
    double mx = 0, my = 0;
    for (size_t i = 0; i < lx.size(); ++i) mx += lx[i], my += ly[i];
    mx /= lx.size();
    my /= ly.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < lx.size(); ++i) sxy += (lx[i] - mx) * (ly[i] - my), sxx += (lx[i] - mx) * (lx[i] - mx);
    tc.slope = sxx > 0 ? sxy / sxx : 0.0;
  }
  return tc;
}

}  // namespace degnse
