// Copyright 2026 The ctoqw Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "ctoqw/dwell.hpp"
#include "ctoqw/model.hpp"
#include "ctoqw/rng.hpp"
#include "ctoqw/stats.hpp"

namespace ctoqw {

inline constexpr Index kEscaped = -1;

struct DwellState {
  Matrix eta;       ///< normalized state e^{tG} rho e^{tG^*} / s(t)
  double survival;  ///< s(t) = Tr(e^{tG} rho e^{tG^*})
};

/// Conditional state and survival probability after dwelling t without a jump.
inline DwellState dwell_evolution(const DwellPropagator& prop, const Matrix& rho, double t) {
  if (t < 0.0) throw PreconditionError("dwell_evolution: negative time");
  const Matrix sigma = prop.evolve(rho, t);
  const double s = sigma.trace().real();
  if (!(s >= 1e-300)) {
    throw PreconditionError("dwell_evolution: state fully decayed (survival " + std::to_string(s) + ")");
  }
  return {hermitian_part(sigma / s), s};
}

inline DwellState dwell_evolution(const Matrix& g, const Matrix& rho, double t) {
  return dwell_evolution(DwellPropagator(g), rho, t);
}

/// Inverts the survival function: returns t* with s(t*) = u, or nullopt when
/// u is at or below the plateau lim s(t) (the walker never jumps).
inline std::optional<double> sample_jump_time(const DwellPropagator& prop, const Matrix& rho, double u) {
  if (!(u > 0.0 && u < 1.0)) throw PreconditionError("sample_jump_time: u must lie in (0, 1)");
  const auto surv = prop.survival(rho);
  if (surv.max_rate() <= 1e-300) return std::nullopt;
  const bool exact_limit = !std::isnan(surv.limit());
  if (exact_limit && u <= surv.limit() + 1e-15) return std::nullopt;
  const Matrix& g = prop.generator();
  const Matrix decay = g + g.adjoint();

  double lo = 0.0;
  double hi = 1.0 / surv.max_rate();
  double s_hi = surv.value(hi);
  for (int k = 0; s_hi >= u; ++k) {
    if (k > 2000 || !std::isfinite(hi)) return std::nullopt;
    if (!exact_limit) {
      const Matrix sigma = prop.evolve(rho, hi);
      const double tr = sigma.trace().real();
      if (tr < 1e-300 || (decay * (sigma / tr)).norm() < 1e-14) return std::nullopt;
    }
    lo = hi;
    hi *= 2.0;
    s_hi = surv.value(hi);
  }
  // Safeguarded Newton on f(t) = s(t) - u, decreasing, f(lo) > 0 >= f(hi).
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 300; ++it) {
    const double f = surv.value(t) - u;
    if (f == 0.0) return t;
    if (f > 0.0) {
      lo = t;
    } else {
      hi = t;
    }
    if (hi - lo <= 1e-15 * std::max(1.0, hi)) return t;
    const double df = surv.derivative(t);
    double next = (df < 0.0) ? t - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    // Once |f| is at the 1e-12 level a Newton step is at rounding size.
    if (std::abs(f) <= 1e-12 && std::abs(next - t) <= 1e-14 * std::max(1.0, t)) return next;
    t = next;
  }
  return t;
}

inline std::optional<double> sample_jump_time(const Matrix& g, const Matrix& rho, double u) {
  return sample_jump_time(DwellPropagator(g), rho, u);
}

struct Destination {
  Index vertex = kEscaped;  ///< kEscaped when the walker left through an escape channel
  Matrix rho;
};

/// Chooses the jump target with probability Tr(R_i^j eta R_i^{j*}) / total and
/// returns the normalized post-jump state.
inline Destination sample_destination(const WalkModel& model, Index i, const Matrix& eta, double u) {
  const auto& out = model.outgoing(i);
  const auto& esc = model.escapes_from(i);
  std::vector<double> rates;
  rates.reserve(out.size() + esc.size());
  double total = 0.0;
  for (auto k : out) {
    const Matrix& r = model.jumps()[k].op;
    rates.push_back(std::max(0.0, (r * eta * r.adjoint()).trace().real()));
    total += rates.back();
  }
  for (auto k : esc) {
    const Matrix& r = model.escapes()[k].op;
    rates.push_back(std::max(0.0, (r * eta * r.adjoint()).trace().real()));
    total += rates.back();
  }
  if (!(total > 0.0)) {
    throw PreconditionError("sample_destination: zero total jump rate at vertex '" + model.id(i) + "'");
  }
  const double target = u * total;
  double acc = 0.0;
  std::size_t pick = rates.size() - 1;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    acc += rates[k];
    if (target < acc && rates[k] > 0.0) {
      pick = k;
      break;
    }
  }
  while (rates[pick] == 0.0 && pick > 0) --pick;
  if (pick >= out.size()) return {kEscaped, Matrix()};
  const auto& j = model.jumps()[out[pick]];
  const Matrix post = j.op * eta * j.op.adjoint();
  return {j.to, hermitian_part(post / post.trace().real())};
}

struct TrajectoryEvent {
  double time = 0.0;
  Index from = 0;
  Index to = 0;  ///< kEscaped for an escape
  Matrix rho;    ///< post-jump state (empty for an escape)
};

struct TrajectoryRecord {
  SitedState initial;
  std::vector<TrajectoryEvent> events;
  double horizon = 0.0;
  /// Time up to which the path is known (horizon unless stopped early or escaped).
  double end_time = 0.0;
  bool absorbed = false;  ///< the last vertex can never be left
  bool escaped = false;   ///< left the model through an escape channel

  [[nodiscard]] Index vertex_at(double t) const {
    Index v = initial.vertex;
    for (const auto& e : events) {
      if (e.time > t) break;
      v = e.to;
    }
    return v;
  }
};

/// Checks the record invariants; returns an empty string when valid.
inline std::string check_record(const WalkModel& model, const TrajectoryRecord& rec, double tol = 1e-9) {
  double last = 0.0;
  Index at = rec.initial.vertex;
  for (std::size_t k = 0; k < rec.events.size(); ++k) {
    const auto& e = rec.events[k];
    if (!(e.time > last) && !(k == 0 && e.time > 0.0)) return "event times not strictly increasing";
    if (!(e.time < rec.horizon)) return "event beyond horizon";
    if (e.from != at) return "event origin does not match current vertex";
    if (e.to == e.from) return "self jump";
    if (e.to != kEscaped) {
      if (e.rho.rows() != model.dim(e.to)) return "post-jump state has wrong dimension";
      if (std::abs(e.rho.trace().real() - 1.0) > tol) return "post-jump state not unit trace";
      if (min_hermitian_eigenvalue(e.rho) < -tol) return "post-jump state not positive";
    } else if (k + 1 != rec.events.size()) {
      return "events after escape";
    }
    last = e.time;
    at = e.to;
  }
  return {};
}

struct SimulationOptions {
  std::uint64_t max_jumps = 10'000'000;
  /// Called after each event; returning true ends the trajectory there.
  std::function<bool(const TrajectoryEvent&)> stop;
};

/// Samples trajectories of the position/internal-state jump process.
/// Dwell phases use the closed form e^{tG} rho e^{tG^*}; jump times invert
/// the survival function and destinations are drawn from the rates at the
/// jump time.
class TrajectorySampler {
 public:
  explicit TrajectorySampler(const WalkModel& model) : model_(&model) {
    props_.reserve(static_cast<std::size_t>(model.num_vertices()));
    for (Index i = 0; i < model.num_vertices(); ++i) props_.emplace_back(model.effective(i));
  }

  [[nodiscard]] const WalkModel& model() const { return *model_; }
  [[nodiscard]] const DwellPropagator& propagator(Index i) const { return props_[static_cast<std::size_t>(i)]; }

  [[nodiscard]] TrajectoryRecord simulate(const SitedState& init, double horizon, std::uint64_t seed,
                                          std::uint64_t stream, const SimulationOptions& opts = {}) const {
    if (!(horizon > 0.0)) throw PreconditionError("simulate: horizon must be positive");
    init.validate(*model_, 1e-9);
    CounterRng rng(seed, stream);
    TrajectoryRecord rec;
    rec.initial = init;
    rec.horizon = horizon;
    rec.end_time = horizon;
    Index at = init.vertex;
    Matrix rho = init.rho;
    double now = 0.0;
    for (;;) {
      const auto& prop = propagator(at);
      const auto dt = sample_jump_time(prop, rho, rng.uniform());
      if (!dt) {
        rec.absorbed = true;
        break;
      }
      if (now + *dt >= horizon) break;
      now += *dt;
      const Matrix sigma = prop.evolve(rho, *dt);
      const Matrix eta = sigma / sigma.trace().real();
      auto dest = sample_destination(*model_, at, eta, rng.uniform());
      rec.events.push_back({now, at, dest.vertex, std::move(dest.rho)});
      if (rec.events.size() > opts.max_jumps) {
        throw ConvergenceError("simulate: jump-count circuit breaker exceeded (" +
                               std::to_string(opts.max_jumps) + " jumps)");
      }
      if (rec.events.back().to == kEscaped) {
        rec.escaped = true;
        rec.end_time = now;
        break;
      }
      at = rec.events.back().to;
      rho = rec.events.back().rho;
      if (opts.stop && opts.stop(rec.events.back())) {
        rec.end_time = now;
        break;
      }
    }
    return rec;
  }

 private:
  const WalkModel* model_;
  std::vector<DwellPropagator> props_;
};

inline TrajectoryRecord simulate(const WalkModel& model, const SitedState& init, double horizon,
                                 std::uint64_t seed, std::uint64_t stream,
                                 const SimulationOptions& opts = {}) {
  return TrajectorySampler(model).simulate(init, horizon, seed, stream, opts);
}

struct Query {
  enum class Kind { Passage, Occupation, Visits, Position };
  std::string id;
  Kind kind = Kind::Passage;
  Index target = 0;           ///< vertex for Passage/Occupation/Visits
  std::vector<double> times;  ///< grid for Passage
  double t = 0.0;             ///< time for Position
};

/// One estimated quantity. For Position queries `vertex` names the vertex
/// ("escaped" for mass lost through escape channels).
struct Estimate {
  std::string query_id;
  std::string vertex;
  double t = 0.0;
  double value = 0.0;
  double std_error = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  std::size_t n = 0;
};

namespace detail {

// Per-trajectory observables in a flat layout, one slot per reported estimate.
struct QueryPlan {
  struct Slot {
    std::size_t query;
    double t;
    Index vertex;
    bool probability;
  };
  std::vector<Slot> slots;
  double sim_horizon = 0.0;
  double needed_time = 0.0;
  std::vector<Index> passage_targets;
};

inline QueryPlan plan_queries(const WalkModel& model, const std::vector<Query>& queries, double horizon) {
  QueryPlan p;
  for (std::size_t q = 0; q < queries.size(); ++q) {
    const auto& qu = queries[q];
    switch (qu.kind) {
      case Query::Kind::Passage:
        for (double t : qu.times) {
          if (t < 0.0 || t > horizon) throw PreconditionError("passage grid time outside [0, horizon]");
          p.slots.push_back({q, t, qu.target, true});
          p.sim_horizon = std::max(p.sim_horizon, t);
        }
        if (std::find(p.passage_targets.begin(), p.passage_targets.end(), qu.target) ==
            p.passage_targets.end()) {
          p.passage_targets.push_back(qu.target);
        }
        break;
      case Query::Kind::Occupation:
      case Query::Kind::Visits:
        p.slots.push_back({q, horizon, qu.target, false});
        p.needed_time = horizon;
        break;
      case Query::Kind::Position:
        if (qu.t < 0.0 || qu.t > horizon) throw PreconditionError("position time outside [0, horizon]");
        for (Index v = 0; v < model.num_vertices(); ++v) p.slots.push_back({q, qu.t, v, true});
        if (model.has_escapes()) p.slots.push_back({q, qu.t, kEscaped, true});
        p.needed_time = std::max(p.needed_time, qu.t);
        break;
    }
  }
  p.sim_horizon = std::max(p.sim_horizon, p.needed_time);
  return p;
}

inline void observe(const TrajectoryRecord& rec, const std::vector<Query>& queries, const QueryPlan& plan,
                    double horizon, double* out) {
  for (std::size_t s = 0; s < plan.slots.size(); ++s) {
    const auto& slot = plan.slots[s];
    const auto& q = queries[slot.query];
    double v = 0.0;
    switch (q.kind) {
      case Query::Kind::Passage:
        for (const auto& e : rec.events) {
          if (e.to == slot.vertex) {
            v = e.time <= slot.t ? 1.0 : 0.0;
            break;
          }
        }
        break;
      case Query::Kind::Occupation: {
        Index at = rec.initial.vertex;
        double since = 0.0;
        for (const auto& e : rec.events) {
          if (at == slot.vertex) v += e.time - since;
          at = e.to;
          since = e.time;
        }
        if (at == slot.vertex && !rec.escaped) v += std::max(0.0, horizon - since);
        break;
      }
      case Query::Kind::Visits: {
        v = rec.initial.vertex == slot.vertex ? 1.0 : 0.0;
        for (const auto& e : rec.events) {
          if (e.to == slot.vertex) v += 1.0;
        }
        break;
      }
      case Query::Kind::Position: {
        Index at = rec.initial.vertex;
        for (const auto& e : rec.events) {
          if (e.time > slot.t) break;
          at = e.to;
        }
        v = at == slot.vertex ? 1.0 : 0.0;
        break;
      }
    }
    out[s] = v;
  }
}

}  // namespace detail

/// Monte Carlo estimates for a set of queries from n_traj independent
/// trajectories (trajectory k uses RNG stream k). Results do not depend on
/// the thread count.
inline std::vector<Estimate> estimate(const WalkModel& model, const SitedState& init, double horizon,
                                      std::size_t n_traj, std::uint64_t seed,
                                      const std::vector<Query>& queries, unsigned threads = 1) {
  if (n_traj < 1) throw PreconditionError("estimate: need at least one trajectory");
  if (!(horizon > 0.0)) throw PreconditionError("estimate: horizon must be positive");
  const auto plan = detail::plan_queries(model, queries, horizon);
  const std::size_t width = plan.slots.size();
  std::vector<double> values(width * n_traj, 0.0);
  const TrajectorySampler sampler(model);
  const double sim_horizon = plan.needed_time > 0.0 ? horizon : std::max(plan.sim_horizon, 1e-300);

  auto worker = [&](std::size_t begin, std::size_t end) {
    std::vector<bool> hit(plan.passage_targets.size());
    for (std::size_t k = begin; k < end; ++k) {
      std::fill(hit.begin(), hit.end(), false);
      SimulationOptions opts;
      opts.stop = [&](const TrajectoryEvent& e) {
        bool all = true;
        for (std::size_t p = 0; p < hit.size(); ++p) {
          if (e.to == plan.passage_targets[p]) hit[p] = true;
          all = all && hit[p];
        }
        return all && e.time >= plan.needed_time;
      };
      const auto rec = sampler.simulate(init, sim_horizon, seed, k, opts);
      detail::observe(rec, queries, plan, horizon, values.data() + k * width);
    }
  };
  threads = std::max(1u, threads);
  if (threads == 1 || n_traj < 2 * threads) {
    worker(0, n_traj);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (n_traj + threads - 1) / threads;
    for (unsigned w = 0; w < threads; ++w) {
      const std::size_t b = w * chunk;
      const std::size_t e = std::min(n_traj, b + chunk);
      if (b < e) pool.emplace_back(worker, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<Estimate> out;
  out.reserve(width);
  const double n = static_cast<double>(n_traj);
  std::vector<double> column(n_traj);
  for (std::size_t s = 0; s < width; ++s) {
    const auto& slot = plan.slots[s];
    for (std::size_t k = 0; k < n_traj; ++k) column[k] = values[k * width + s];
    const double sum = stats::pairwise_sum(column);
    const double mean = sum / n;
    for (std::size_t k = 0; k < n_traj; ++k) column[k] = (column[k] - mean) * (column[k] - mean);
    const double var = n_traj > 1 ? stats::pairwise_sum(column) / (n - 1.0) : 0.0;
    Estimate e;
    e.query_id = queries[slot.query].id;
    e.t = slot.t;
    e.vertex = slot.vertex == kEscaped ? "escaped" : model.id(slot.vertex);
    e.value = mean;
    e.n = n_traj;
    if (slot.probability) {
      e.std_error = std::sqrt(std::max(0.0, mean * (1.0 - mean)) / n);
      const auto ci = stats::wilson_interval(sum, n);
      e.ci_lo = std::min(ci.lo, mean);
      e.ci_hi = std::max(ci.hi, mean);
    } else {
      e.std_error = std::sqrt(var / n);
      e.ci_lo = mean - 1.959963984540054 * e.std_error;
      e.ci_hi = mean + 1.959963984540054 * e.std_error;
    }
    out.push_back(std::move(e));
  }
  return out;
}

/// First-passage times tau_target = inf{t >= T_1 : X_t = target}; +inf when
/// not reached before the horizon.
inline std::vector<double> sample_first_passage_times(const WalkModel& model, const SitedState& init,
                                                      Index target, double horizon, std::size_t n,
                                                      std::uint64_t seed) {
  const TrajectorySampler sampler(model);
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  SimulationOptions opts;
  opts.stop = [target](const TrajectoryEvent& e) { return e.to == target; };
  for (std::size_t k = 0; k < n; ++k) {
    const auto rec = sampler.simulate(init, horizon, seed, k, opts);
    for (const auto& e : rec.events) {
      if (e.to == target) {
        out[k] = e.time;
        break;
      }
    }
  }
  return out;
}

/// First jump times from init; +inf when the walker never jumps.
inline std::vector<double> sample_first_jump_times(const WalkModel& model, const SitedState& init,
                                                   std::size_t n, std::uint64_t seed) {
  const TrajectorySampler sampler(model);
  std::vector<double> out(n, std::numeric_limits<double>::infinity());
  SimulationOptions opts;
  opts.stop = [](const TrajectoryEvent&) { return true; };
  for (std::size_t k = 0; k < n; ++k) {
    const auto rec = sampler.simulate(init, std::numeric_limits<double>::max(), seed, k, opts);
    if (!rec.events.empty()) out[k] = rec.events.front().time;
  }
  return out;
}

}  // namespace ctoqw
