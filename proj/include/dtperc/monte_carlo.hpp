#pragma once

// Seeded Monte Carlo estimates. Sample i draws its randomness from a stream
// keyed by (seed, i), so results do not depend on how samples are split
// across threads.

#include <algorithm>
#include <bit>
#include <memory>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "dtperc/decision_tree.hpp"
#include "dtperc/error.hpp"
#include "dtperc/event.hpp"
#include "dtperc/graph.hpp"

namespace dtperc {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class SampleStream {
 public:
  SampleStream(std::uint64_t seed, std::uint64_t index)
      : state_(splitmix64(seed ^ splitmix64(index ^ 0xD1B54A32D192ED03ULL))) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

// Edge e is open iff its uniform is below p_e, so raising p_e on the same
// stream can only open more edges.
inline std::uint64_t sample_configuration(const std::vector<double>& p, SampleStream& rng) {
  std::uint64_t c = 0;
  for (std::size_t e = 0; e < p.size(); ++e)
    if (rng.uniform() < p[e]) c |= std::uint64_t{1} << e;
  return c;
}

struct Estimate {
  double mean = 0;
  double se = 0;
  double lo = 0;  // Wilson 95%
  double hi = 0;
  std::uint64_t n = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kWilsonZ = 1.959963984540054;

inline Estimate make_estimate(std::uint64_t hits, std::uint64_t n, std::uint64_t seed) {
  Estimate e;
  e.n = n;
  e.seed = seed;
  if (n == 0) return e;
  const double nn = static_cast<double>(n);
  const double ph = static_cast<double>(hits) / nn;
  e.mean = ph;
  e.se = std::sqrt(ph * (1 - ph) / nn);
  const double z2 = kWilsonZ * kWilsonZ;
  const double denom = 1 + z2 / nn;
  const double centre = (ph + z2 / (2 * nn)) / denom;
  const double half = kWilsonZ * std::sqrt(ph * (1 - ph) / nn + z2 / (4 * nn * nn)) / denom;
  e.lo = hits == 0 ? 0.0 : std::max(0.0, centre - half);
  e.hi = hits == n ? 1.0 : std::min(1.0, centre + half);
  return e;
}

// Hit counts and pairwise co-occurrence counts of K indicators.
struct JointCounts {
  std::uint64_t n = 0;
  std::vector<std::uint64_t> hits;
  std::vector<std::uint64_t> both;  // K*K

  std::vector<double> means() const {
    std::vector<double> m;
    for (auto h : hits) m.push_back(n ? static_cast<double>(h) / static_cast<double>(n) : 0.0);
    return m;
  }

  // Covariance matrix of the vector of sample means.
  std::vector<double> covariance() const {
    const std::size_t k = hits.size();
    auto m = means();
    std::vector<double> cov(k * k, 0.0);
    if (n == 0) return cov;
    for (std::size_t i = 0; i < k; ++i)
      for (std::size_t j = 0; j < k; ++j) {
        double pij = static_cast<double>(both[i * k + j]) / static_cast<double>(n);
        cov[i * k + j] = (pij - m[i] * m[j]) / static_cast<double>(n);
      }
    return cov;
  }
};

inline unsigned resolve_threads(unsigned threads) {
  if (threads == 0) threads = std::max(1U, std::thread::hardware_concurrency());
  return threads;
}

// make_eval() is called once per worker; the returned callable maps a sample
// index to a bitmask of K indicators.
template <class MakeEval>
JointCounts mc_run(std::uint64_t n, std::size_t k, unsigned threads, MakeEval make_eval) {
  if (n == 0) throw InputError("sample count must be at least 1");
  if (k > 64) throw InputError("at most 64 indicators per Monte Carlo pass");
  threads = static_cast<unsigned>(std::min<std::uint64_t>(resolve_threads(threads), n));
  std::vector<JointCounts> parts(threads);
  auto work = [&](unsigned w) {
    JointCounts& jc = parts[w];
    jc.hits.assign(k, 0);
    jc.both.assign(k * k, 0);
    auto eval = make_eval();
    std::uint64_t begin = n * w / threads, end = n * (w + 1) / threads;
    for (std::uint64_t i = begin; i < end; ++i) {
      std::uint64_t bits = eval(i);
      ++jc.n;
      for (std::uint64_t b = bits; b; b &= b - 1) {
        int x = std::countr_zero(b);
        ++jc.hits[x];
        for (std::uint64_t b2 = bits; b2; b2 &= b2 - 1) ++jc.both[x * k + std::countr_zero(b2)];
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  JointCounts total;
  total.hits.assign(k, 0);
  total.both.assign(k * k, 0);
  for (const auto& p : parts) {
    total.n += p.n;
    for (std::size_t i = 0; i < k; ++i) total.hits[i] += p.hits[i];
    for (std::size_t i = 0; i < k * k; ++i) total.both[i] += p.both[i];
  }
  return total;
}

// Joint estimate of several events on one configuration per sample.
inline JointCounts mc_joint(const Graph& g, const std::vector<EventExpr>& events, std::uint64_t n,
                            std::uint64_t seed, unsigned threads = 1) {
  const auto p = g.probabilities();
  return mc_run(n, events.size(), threads, [&]() {
    std::vector<CompiledEvent> ce;
    for (const auto& e : events) ce.emplace_back(g, e);
    return [&g, &p, seed, ce = std::move(ce), cs = ClusterScratch{}, mf = MaxFlow{},
            labels = std::vector<VertexId>{}](std::uint64_t i) mutable {
      SampleStream rng(seed, i);
      std::uint64_t c = sample_configuration(p, rng);
      cs.compute(g, c, labels);
      std::uint64_t bits = 0;
      for (std::size_t k = 0; k < ce.size(); ++k)
        if (ce[k].evaluate(labels, c, mf)) bits |= std::uint64_t{1} << k;
      return bits;
    };
  });
}

inline Estimate mc_prob(const Graph& g, const EventExpr& e, std::uint64_t n, std::uint64_t seed,
                        unsigned threads = 1) {
  auto jc = mc_joint(g, {e}, n, seed, threads);
  return make_estimate(jc.hits[0], jc.n, seed);
}

// Per sample: C1 from the first |E| uniforms, C2 from the next |E|.
struct PairSample {
  std::uint64_t c1 = 0, c2 = 0, s = 0;
};

// Indicators on (C1, C2, S): single-configuration events read C1.
using PairIndicator = std::function<bool(const PairSample&)>;

inline JointCounts mc_pair_joint(const Graph& g, const Strategy& t, const std::vector<PairIndicator>& ind,
                                 std::uint64_t n, std::uint64_t seed, unsigned threads = 1) {
  const auto p = g.probabilities();
  return mc_run(n, ind.size(), threads, [&]() {
    return [&](std::uint64_t i) {
      SampleStream rng(seed, i);
      PairSample ps;
      ps.c1 = sample_configuration(p, rng);
      ps.c2 = sample_configuration(p, rng);
      ps.s = run_s(t, g, ps.c1, ps.c2);
      std::uint64_t bits = 0;
      for (std::size_t k = 0; k < ind.size(); ++k)
        if (ind[k](ps)) bits |= std::uint64_t{1} << k;
      return bits;
    };
  });
}

// Indicator helpers evaluating compiled events directly (no truth tables).
inline PairIndicator mc_event_on_c1(const Graph& g, const EventExpr& a) {
  auto ce = std::make_shared<const CompiledEvent>(g, a);
  return [ce](const PairSample& ps) { return ce->evaluate(ps.c1); };
}

inline PairIndicator mc_joint_indicator(const Graph& g, const EventExpr& a, const EventExpr& b) {
  auto ca = std::make_shared<const CompiledEvent>(g, a);
  auto cb = std::make_shared<const CompiledEvent>(g, b);
  return [ca, cb](const PairSample& ps) {
    return ca->evaluate(ps.c1) && cb->evaluate(splice_bits(ps.c1, ps.c2, ps.s));
  };
}

inline PairIndicator mc_sqs_indicator(const Graph& g, const EventExpr& a, const EventExpr& b) {
  require_increasing(a, g);
  require_increasing(b, g);
  auto ca = std::make_shared<const CompiledEvent>(g, a);
  auto cb = std::make_shared<const CompiledEvent>(g, b);
  const std::uint64_t full = Configuration::full_mask(g.num_edges());
  return [ca, cb, full](const PairSample& ps) {
    const std::uint64_t in_s = ps.s & ps.c1;
    const std::uint64_t a_base = ~ps.s & full & ps.c1;
    const std::uint64_t b_base = ~ps.s & full & ps.c2;
    if (std::popcount(in_s) > kMaxSplitEdges)
      throw SizeGuardError("split over more than " + std::to_string(kMaxSplitEdges) + " edges");
    if (!ca->evaluate(ps.c1) || !cb->evaluate(in_s | b_base)) return false;
    return split_search(
        in_s, a_base, b_base, [&](std::uint64_t x) { return ca->evaluate(x); },
        [&](std::uint64_t x) { return cb->evaluate(x); });
  };
}

enum class McPairKind { joint, sqs };

inline Estimate mc_pair(const Graph& g, const Strategy& t, McPairKind kind, const EventExpr& a, const EventExpr& b,
                        std::uint64_t n, std::uint64_t seed, unsigned threads = 1) {
  PairIndicator ind = kind == McPairKind::joint ? mc_joint_indicator(g, a, b) : mc_sqs_indicator(g, a, b);
  auto jc = mc_pair_joint(g, t, {ind}, n, seed, threads);
  return make_estimate(jc.hits[0], jc.n, seed);
}

inline Estimate mc_npaths(const Graph& g, VertexId u, VertexId v, int n_paths, std::uint64_t samples,
                          std::uint64_t seed, unsigned threads = 1) {
  if (n_paths < 1) throw InputError("npaths count must be at least 1");
  return mc_prob(g, EventExpr::npaths(g.name(u), g.name(v), n_paths), samples, seed, threads);
}

// f(n) = P(at least n edge-disjoint open u-v paths) for n = 1..n_max, jointly.
inline JointCounts mc_npaths_profile(const Graph& g, VertexId u, VertexId v, int n_max, std::uint64_t samples,
                                     std::uint64_t seed, unsigned threads = 1) {
  const auto p = g.probabilities();
  return mc_run(samples, static_cast<std::size_t>(n_max), threads, [&]() {
    return [&, mf = MaxFlow{}](std::uint64_t i) mutable {
      SampleStream rng(seed, i);
      std::uint64_t c = sample_configuration(p, rng);
      int flow = mf.edge_disjoint_paths(g, c, u, v, n_max);
      return flow == 0 ? std::uint64_t{0} : Configuration::full_mask(static_cast<std::size_t>(flow));
    };
  });
}

// ---------------------------------------------------------------------------
// Delta method

// Standard error of f(means) from the covariance of the means, with a
// central-difference gradient.
inline double delta_se(const std::function<double(const std::vector<double>&)>& f, const std::vector<double>& x,
                       const std::vector<double>& cov) {
  const std::size_t k = x.size();
  std::vector<double> grad(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double h = 1e-6 * std::max(1.0, std::abs(x[i]));
    auto up = x, down = x;
    up[i] += h;
    down[i] -= h;
    grad[i] = (f(up) - f(down)) / (2 * h);
  }
  double var = 0;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) var += grad[i] * cov[i * k + j] * grad[j];
  return std::sqrt(std::max(0.0, var));
}

enum class Verdict { holds, violated, inconclusive };

inline const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::holds:
      return "holds";
    case Verdict::violated:
      return "violated";
    default:
      return "inconclusive";
  }
}

inline Verdict exact_verdict(double slack, double tolerance) {
  return slack >= -tolerance ? Verdict::holds : Verdict::violated;
}

inline Verdict mc_verdict(double slack, double se, double sigma) {
  if (slack > sigma * se) return Verdict::holds;
  if (slack < -sigma * se) return Verdict::violated;
  return Verdict::inconclusive;
}

}  // namespace dtperc
