#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "tgpet/admm.hpp"
#include "tgpet/kl_basis.hpp"
#include "tgpet/posterior.hpp"

namespace tgpet {

enum class SamplerKind { pcn, pcnl, pdpcn };

inline const char* to_string(SamplerKind k) {
  switch (k) {
    case SamplerKind::pcn: return "pcn";
    case SamplerKind::pcnl: return "pcnl";
    case SamplerKind::pdpcn: return "pdpcn";
  }
  return "?";
}

inline SamplerKind parse_sampler_kind(const std::string& s) {
  if (s == "pcn") return SamplerKind::pcn;
  if (s == "pcnl") return SamplerKind::pcnl;
  if (s == "pdpcn") return SamplerKind::pdpcn;
  throw std::invalid_argument("unknown sampler kind '" + s + "' (expected pcn, pcnl or pdpcn)");
}

struct SamplerConfig {
  SamplerKind kind = SamplerKind::pdpcn;
  double beta = 0.1;
  double delta = 0.2;
  std::int64_t n_samples = 20000;
  std::int64_t burn_in = 2000;
  std::int64_t thinning = 1;
  std::uint64_t seed = 1;
  /// Number of KL modes the offset direction is projected onto; -1 means all.
  Index k_proj = -1;

  void validate() const {
    if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("SamplerConfig: beta outside [0, 1]");
    if (!(delta >= 0.0 && delta <= 2.0)) throw std::invalid_argument("SamplerConfig: delta outside [0, 2]");
    if (kind != SamplerKind::pcn && !(delta > 0.0))
      throw std::invalid_argument("SamplerConfig: delta must be > 0 for Langevin-type samplers");
    if (burn_in < 0) throw std::invalid_argument("SamplerConfig: burn_in must be >= 0");
    if (!(n_samples > burn_in)) throw std::invalid_argument("SamplerConfig: n_samples must exceed burn_in");
    if (thinning < 1) throw std::invalid_argument("SamplerConfig: thinning must be >= 1");
  }

  double stepsize() const { return kind == SamplerKind::pcn ? beta : delta; }
  std::int64_t stored_count() const { return (n_samples - burn_in) / thinning; }
};

/// Current position with cached potential and (for Langevin-type moves)
/// the offset direction at that position.
template <typename Scalar = double>
struct MarkovState {
  CoeffVector<Scalar> c;
  Scalar psi = 0;
  Vector<Scalar> direction;
};

struct StepOutcome {
  bool accepted = false;
  double log_accept = 0.0;
};

template <typename Scalar, typename Rng>
CoeffVector<Scalar> standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  CoeffVector<Scalar> w(n);
  for (Index i = 0; i < n; ++i) w(i) = static_cast<Scalar>(normal(rng));
  return w;
}

/// v = sqrt(1 - beta^2) z + beta w, w ~ reference.
template <typename Scalar, typename Rng>
CoeffVector<Scalar> pcn_propose(const CoeffVector<Scalar>& z, double beta, Rng& rng) {
  if (!(beta >= 0.0 && beta <= 1.0))
    throw std::invalid_argument("pcn_propose: beta=" + std::to_string(beta) + " outside [0, 1]");
  const CoeffVector<Scalar> w = standard_normal<Scalar>(z.size(), rng);
  return static_cast<Scalar>(std::sqrt(1.0 - beta * beta)) * z + static_cast<Scalar>(beta) * w;
}

inline double pcn_accept(double psi_z, double psi_v) {
  const double e = psi_z - psi_v;
  if (e >= 0.0) return 1.0;
  return std::exp(e);
}

template <typename Rng>
bool metropolis(double log_accept, Rng& rng) {
  if (log_accept >= 0.0) return true;
  if (!std::isfinite(log_accept)) return false;
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  return std::log(unif(rng)) < log_accept;
}

namespace detail {

template <typename Scalar>
std::optional<Scalar> try_psi(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& c) {
  try {
    const Scalar psi = potential_psi(post, c);
    if (std::isfinite(psi)) return psi;
  } catch (const std::domain_error&) {
  }
  return std::nullopt;
}

}  // namespace detail

template <typename Scalar, typename Rng>
StepOutcome pcn_step(const TGPosterior<Scalar>& post, MarkovState<Scalar>& state, double beta, Rng& rng) {
  const CoeffVector<Scalar> v = pcn_propose(state.c, beta, rng);
  const auto psi_v = detail::try_psi(post, v);
  StepOutcome out;
  out.log_accept = psi_v ? static_cast<double>(state.psi - *psi_v) : -std::numeric_limits<double>::infinity();
  out.accepted = metropolis(out.log_accept, rng);
  if (out.accepted) {
    state.c = v;
    state.psi = *psi_v;
  }
  return out;
}

/// Crank-Nicolson Langevin proposal
///   (2 + delta) v = (2 - delta) z - 2 delta C0 g + sqrt(8 delta) w
/// written in standard-normal coordinates (C0 g becomes sqrt(eta) g).
template <typename Scalar>
CoeffVector<Scalar> langevin_propose(const KLBasis<Scalar>& basis, const CoeffVector<Scalar>& z,
                                     const Vector<Scalar>& g, double delta, const CoeffVector<Scalar>& w) {
  const Scalar d = static_cast<Scalar>(delta);
  return ((Scalar(2) - d) * z - Scalar(2) * d * apply_c0_sqrt(basis, g) +
          static_cast<Scalar>(std::sqrt(8.0 * delta)) * w) /
         (Scalar(2) + d);
}

/// Acceptance exponent rho(z, v) - rho(v, z).
template <typename Scalar>
Scalar langevin_log_accept(const KLBasis<Scalar>& basis, Scalar psi_z, const CoeffVector<Scalar>& z,
                           const Vector<Scalar>& g_z, Scalar psi_v, const CoeffVector<Scalar>& v,
                           const Vector<Scalar>& g_v, double delta) {
  return rho_from_psi(basis, psi_z, z, v, g_z, delta) - rho_from_psi(basis, psi_v, v, z, g_v, delta);
}

/// One Metropolis-adjusted step with a state-dependent offset direction.
template <typename Scalar, typename Rng, typename DirectionFn>
StepOutcome langevin_step(const TGPosterior<Scalar>& post, MarkovState<Scalar>& state, double delta,
                          DirectionFn&& direction, Rng& rng) {
  check_delta(delta, "langevin_step");
  const CoeffVector<Scalar> w = standard_normal<Scalar>(state.c.size(), rng);
  const CoeffVector<Scalar> v = langevin_propose(post.basis(), state.c, state.direction, delta, w);
  StepOutcome out;
  const auto psi_v = detail::try_psi(post, v);
  Vector<Scalar> g_v;
  if (psi_v) {
    g_v = direction(v);
    out.log_accept = static_cast<double>(
        langevin_log_accept(post.basis(), state.psi, state.c, state.direction, *psi_v, v, g_v, delta));
  } else {
    out.log_accept = -std::numeric_limits<double>::infinity();
  }
  out.accepted = metropolis(out.log_accept, rng);
  if (out.accepted) {
    state.c = v;
    state.psi = *psi_v;
    state.direction = std::move(g_v);
  }
  return out;
}

/// pCNL with g = DPsi; requires lambda = 0.
template <typename Scalar, typename Rng>
StepOutcome pcnl_step(const TGPosterior<Scalar>& post, MarkovState<Scalar>& state, double delta, Rng& rng) {
  if (post.lambda() != 0.0)
    throw std::invalid_argument("pcnl_step: the TV term is not differentiable; use pdpcn for lambda > 0");
  if (!(delta > 0.0 && delta <= 2.0)) throw std::invalid_argument("pcnl_step: delta outside (0, 2]");
  if (state.direction.size() != state.c.size()) state.direction = psi_direction(post, state.c);
  return langevin_step(post, state, delta, [&](const CoeffVector<Scalar>& v) { return psi_direction(post, v); },
                       rng);
}

/// PD-pCN: offset direction from the augmented Lagrangian at (phi*, eta*).
template <typename Scalar, typename Rng>
StepOutcome pdpcn_step(const TGPosterior<Scalar>& post, MarkovState<Scalar>& state,
                       const AdmmState<Scalar>& solution, double delta, Index k_proj, Rng& rng) {
  if (!(delta > 0.0 && delta <= 2.0)) throw std::invalid_argument("pdpcn_step: delta outside (0, 2]");
  auto dir = [&](const CoeffVector<Scalar>& v) { return offset_direction(post, v, solution, k_proj); };
  if (state.direction.size() != state.c.size()) state.direction = dir(state.c);
  return langevin_step(post, state, delta, dir, rng);
}

/// Stored samples (post burn-in, thinned, one row each) plus per-iteration
/// acceptance flags and Psi values over the post-burn-in steps.
template <typename Scalar = double>
struct Chain {
  using SampleMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SamplerConfig config;
  SampleMatrix samples;
  std::vector<std::uint8_t> accept_history;
  std::vector<double> psi_trace;
  std::int64_t burn_in_accepted = 0;
  bool aborted = false;
  std::string abort_reason;

  Index size() const { return samples.rows(); }
  Index n_modes() const { return samples.cols(); }
  CoeffVector<Scalar> sample(Index i) const { return samples.row(i).transpose(); }

  double acceptance_rate() const {
    if (accept_history.empty()) return 0.0;
    std::int64_t n = 0;
    for (auto a : accept_history) n += a;
    return static_cast<double>(n) / static_cast<double>(accept_history.size());
  }
};

/// Every `stride`-th stored sample, ending at the last one. Acceptance and
/// Psi traces are kept whole.
template <typename Scalar>
Chain<Scalar> thinned(const Chain<Scalar>& chain, Index stride) {
  if (stride < 1) throw std::invalid_argument("thinned: stride must be >= 1");
  if (stride == 1) return chain;
  Chain<Scalar> out = chain;
  const Index n = chain.size();
  const Index kept = n / stride;
  out.samples.resize(kept, chain.n_modes());
  for (Index k = 0; k < kept; ++k) out.samples.row(k) = chain.samples.row(n - 1 - (kept - 1 - k) * stride);
  out.config.thinning *= stride;
  return out;
}

/// Runs a chain from `init`. PD-pCN needs the ADMM solution (phi*, eta*).
/// Deterministic for a given config.seed.
template <typename Scalar>
Chain<Scalar> run_chain(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& init,
                        const SamplerConfig& config, const AdmmState<Scalar>* solution = nullptr) {
  config.validate();
  if (init.size() != post.n_modes()) throw std::invalid_argument("run_chain: init length mismatch");
  if (config.kind == SamplerKind::pdpcn && !solution)
    throw std::invalid_argument("run_chain: pdpcn requires the primal-dual solution");
  const Index k_proj = config.k_proj < 0 ? post.n_modes() : config.k_proj;
  if (k_proj > post.n_modes()) throw std::out_of_range("run_chain: k_proj exceeds n_modes");

  Chain<Scalar> chain;
  chain.config = config;
  chain.samples.resize(config.stored_count(), post.n_modes());

  auto rng = make_stream(config.seed, 0);
  MarkovState<Scalar> state;
  state.c = init;
  const auto psi0 = detail::try_psi(post, init);
  if (!psi0) {
    chain.aborted = true;
    chain.abort_reason = "Psi is not finite at the initial state";
    chain.samples.resize(0, post.n_modes());
    return chain;
  }
  state.psi = *psi0;

  auto step = [&]() -> StepOutcome {
    switch (config.kind) {
      case SamplerKind::pcn: return pcn_step(post, state, config.beta, rng);
      case SamplerKind::pcnl: return pcnl_step(post, state, config.delta, rng);
      case SamplerKind::pdpcn: return pdpcn_step(post, state, *solution, config.delta, k_proj, rng);
    }
    return {};
  };

  chain.accept_history.reserve(static_cast<std::size_t>(config.n_samples - config.burn_in));
  chain.psi_trace.reserve(static_cast<std::size_t>(config.n_samples - config.burn_in));
  Index stored = 0;
  for (std::int64_t it = 0; it < config.n_samples; ++it) {
    const StepOutcome o = step();
    if (!std::isfinite(static_cast<double>(state.psi))) {
      chain.aborted = true;
      chain.abort_reason = "Psi became non-finite at iteration " + std::to_string(it);
      chain.samples.conservativeResize(stored, post.n_modes());
      return chain;
    }
    if (it < config.burn_in) {
      chain.burn_in_accepted += o.accepted ? 1 : 0;
      continue;
    }
    chain.accept_history.push_back(o.accepted ? 1 : 0);
    chain.psi_trace.push_back(static_cast<double>(state.psi));
    const std::int64_t kept = it - config.burn_in;
    if ((kept + 1) % config.thinning == 0 && stored < chain.samples.rows())
      chain.samples.row(stored++) = state.c.transpose();
  }
  return chain;
}

/// Mean acceptance of a short pilot run at the given stepsize.
template <typename Scalar>
double pilot_acceptance(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& init,
                        SamplerConfig config, double stepsize, std::int64_t pilot_steps,
                        const AdmmState<Scalar>* solution = nullptr) {
  if (config.kind == SamplerKind::pcn)
    config.beta = stepsize;
  else
    config.delta = stepsize;
  config.n_samples = pilot_steps;
  config.burn_in = 0;
  config.thinning = pilot_steps;
  return run_chain(post, init, config, solution).acceptance_rate();
}

struct TuneResult {
  double stepsize = 0.0;
  double acceptance = 0.0;
};

/// Bisection (in log stepsize) for the pilot acceptance closest to target.
template <typename Scalar>
TuneResult tune_stepsize(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& init,
                         const SamplerConfig& config, const AdmmState<Scalar>* solution = nullptr,
                         double target = 0.25, std::int64_t pilot_steps = 2000, int iterations = 12) {
  double lo = std::log(1e-4);
  double hi = std::log(config.kind == SamplerKind::pcn ? 1.0 : 2.0);
  TuneResult best{std::exp(hi), -1.0};
  for (int it = 0; it < iterations; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double s = std::exp(mid);
    const double acc = pilot_acceptance(post, init, config, s, pilot_steps, solution);
    if (best.acceptance < 0.0 || std::abs(acc - target) < std::abs(best.acceptance - target))
      best = {s, acc};
    if (acc > target)
      lo = mid;
    else
      hi = mid;
  }
  return best;
}

template <typename Scalar>
struct WarmStart {
  CoeffVector<Scalar> state;
  TuneResult tune;
};

/// Alternates stepsize tuning with short burn-in runs so the pilot runs see
/// the stationary regime rather than the starting point (acceptance at the
/// MAP is not representative).
template <typename Scalar>
WarmStart<Scalar> warm_tune(const TGPosterior<Scalar>& post, const CoeffVector<Scalar>& init,
                            const SamplerConfig& config, const AdmmState<Scalar>* solution = nullptr,
                            int rounds = 3, std::int64_t burn_steps = 2000, double target = 0.25,
                            std::int64_t pilot_steps = 2000) {
  if (rounds < 1 || burn_steps < 1) throw std::invalid_argument("warm_tune: rounds and burn_steps must be >= 1");
  WarmStart<Scalar> out{init, {}};
  SamplerConfig run = config;
  for (int r = 0; r < rounds; ++r) {
    out.tune = tune_stepsize(post, out.state, run, solution, target, pilot_steps);
    (run.kind == SamplerKind::pcn ? run.beta : run.delta) = out.tune.stepsize;
    SamplerConfig burn = run;
    burn.n_samples = burn_steps;
    burn.burn_in = 0;
    burn.thinning = burn_steps;
    burn.seed = make_stream(config.seed, static_cast<std::uint64_t>(r) + 1)();
    Chain<Scalar> ch = run_chain(post, out.state, burn, solution);
    // a burn that accepts nothing leaves the state at a sticky start (the MAP
    // often is one); retry it with smaller steps
    for (int retry = 0; retry < 20 && !ch.aborted && ch.acceptance_rate() == 0.0; ++retry) {
      (burn.kind == SamplerKind::pcn ? burn.beta : burn.delta) *= 0.5;
      ch = run_chain(post, out.state, burn, solution);
    }
    if (ch.aborted || ch.size() == 0) throw std::runtime_error("warm_tune: burn-in run aborted: " + ch.abort_reason);
    out.state = ch.sample(ch.size() - 1);
  }
  return out;
}

}  // namespace tgpet
