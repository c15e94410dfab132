#pragma once

// Helpers shared by the unit tests and the acceptance binary: random caption
// generators, brute-force oracles, and a central-difference gradient checker.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "tcgen/caption.hpp"
#include "tcgen/curation.hpp"
#include "tcgen/metrics.hpp"
#include "tcgen/random.hpp"
#include "tcgen/tensor.hpp"

namespace tcgen::testing {

inline const std::vector<std::string>& word_pool() {
  static const std::vector<std::string> words = {
      "dog",  "barking", "a",     "man",   "speaking", "rain",  "falling", "loud",  "bell",
      "rings", "engine", "idles", "birds", "chirping", "water", "running", "door",  "slams",
      "cat",  "meows",   "wind",  "blows", "car",      "horn",  "honks",   "baby",  "cries"};
  return words;
}

inline std::string random_description(Rng& rng) {
  const auto& words = word_pool();
  const std::size_t n = 1 + rng.below(4);
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[rng.below(words.size())];
  }
  return out;
}

/// Valid caption on a centisecond grid: 1..max_events events with distinct
/// descriptions, each holding 1..3 disjoint sorted intervals.
inline TimedCaption random_caption(Rng& rng, std::size_t max_events = 4, double duration = 10.0) {
  TimedCaption c;
  c.duration = duration;
  const auto ticks = static_cast<std::uint64_t>(std::llround(duration * 100.0));
  const std::size_t n = 1 + rng.below(max_events);
  while (c.events.size() < n) {
    std::string desc = random_description(rng);
    if (std::any_of(c.events.begin(), c.events.end(),
                    [&](const TimedEvent& e) { return e.description == desc; }))
      continue;
    TimedEvent e{desc, {}};
    const std::size_t k = 1 + rng.below(3);
    std::vector<std::uint64_t> cuts;
    while (cuts.size() < 2 * k) {
      const auto t = rng.below(ticks + 1);
      if (std::find(cuts.begin(), cuts.end(), t) == cuts.end()) cuts.push_back(t);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t i = 0; i < k; ++i)
      e.intervals.push_back({static_cast<double>(cuts[2 * i]) / 100.0,
                             static_cast<double>(cuts[2 * i + 1]) / 100.0});
    c.events.push_back(std::move(e));
  }
  return c;
}

/// Every pair of intervals from distinct events, checked directly.
inline std::vector<OverlapPair> brute_force_overlaps(const TimedCaption& c) {
  std::vector<OverlapPair> out;
  for (std::size_t a = 0; a < c.events.size(); ++a)
    for (std::size_t ia = 0; ia < c.events[a].intervals.size(); ++ia)
      for (std::size_t b = a + 1; b < c.events.size(); ++b)
        for (std::size_t ib = 0; ib < c.events[b].intervals.size(); ++ib) {
          const auto& x = c.events[a].intervals[ia];
          const auto& y = c.events[b].intervals[ib];
          const double lo = std::max(x.onset, y.onset);
          const double hi = std::min(x.offset, y.offset);
          if (hi > lo) out.push_back({a, ia, b, ib, {lo, hi}});
        }
  return out;
}

/// Random activity grid over the given labels.
inline SegmentGrid random_grid(Rng& rng, const std::vector<std::string>& labels, std::size_t segments,
                               double density) {
  SegmentGrid g;
  g.segments = segments;
  g.labels = labels;
  g.activity.assign(labels.size(), std::vector<bool>(segments));
  for (auto& row : g.activity)
    for (std::size_t s = 0; s < segments; ++s) row[s] = rng.bernoulli(density);
  return g;
}

struct BruteCounts {
  std::uint64_t tp = 0, fp = 0, fn = 0;
};

inline BruteCounts brute_force_counts(const SegmentGrid& ref, const SegmentGrid& hyp) {
  BruteCounts c;
  for (std::size_t e = 0; e < ref.labels.size(); ++e)
    for (std::size_t s = 0; s < ref.segments; ++s) {
      if (ref.activity[e][s] && hyp.activity[e][s]) ++c.tp;
      if (!ref.activity[e][s] && hyp.activity[e][s]) ++c.fp;
      if (ref.activity[e][s] && !hyp.activity[e][s]) ++c.fn;
    }
  return c;
}

inline ad::Tensor random_tensor(Rng& rng, ad::Shape shape, bool requires_grad = false,
                                double scale = 1.0) {
  std::vector<double> v(ad::numel(shape));
  for (double& x : v) x = scale * rng.normal();
  return ad::Tensor::from(std::move(shape), std::move(v), requires_grad);
}

/// Relative error |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  // Location and values of the worst element, for failure messages.
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares reverse-mode gradients of L = sum(w * f(inputs)), with fixed
/// random weights w, against a five-point central difference with step h
/// for every element of every input (or `max_per_input` random elements of
/// each). The fourth-order stencil allows a step large enough that
/// rounding stays well below the tolerance, which matters for directions
/// whose true derivative is zero.
inline GradCheck check_gradients(const std::function<ad::Tensor(const std::vector<ad::Tensor>&)>& f,
                                 std::vector<ad::Tensor> inputs, std::uint64_t seed = 1,
                                 double h = 2e-3, std::size_t max_per_input = 0) {
  Rng rng(seed);
  const ad::Tensor probe = [&] {
    ad::NoGradGuard guard;
    return f(inputs);
  }();
  const ad::Tensor weights = random_tensor(rng, probe.shape());
  auto loss = [&](const std::vector<ad::Tensor>& xs) { return ad::sum(ad::mul(f(xs), weights)); };

  for (auto& x : inputs) x.zero_grad();
  loss(inputs).backward();

  GradCheck result;
  ad::NoGradGuard guard;
  for (std::size_t which = 0; which < inputs.size(); ++which) {
    auto& x = inputs[which];
    if (!x.requires_grad()) continue;
    const std::vector<double> analytic(x.grad().begin(), x.grad().end());
    std::vector<std::size_t> indices(x.size());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    if (max_per_input > 0 && indices.size() > max_per_input) {
      rng.shuffle(indices.begin(), indices.end());
      indices.resize(max_per_input);
    }
    for (const std::size_t i : indices) {
      auto values = x.mutable_values();
      const double saved = values[i];
      // Differences are taken per output element before weighting, so
      // rounding scales with the outputs rather than with L.
      auto at = [&](double offset) {
        values[i] = saved + offset;
        const ad::Tensor out = f(inputs);
        return std::vector<double>(out.values().begin(), out.values().end());
      };
      const auto p1 = at(h), m1 = at(-h), p2 = at(2.0 * h), m2 = at(-2.0 * h);
      double numeric = 0.0;
      for (std::size_t k = 0; k < p1.size(); ++k)
        numeric += weights.values()[k] * (8.0 * (p1[k] - m1[k]) - (p2[k] - m2[k]));
      numeric /= 12.0 * h;
      values[i] = saved;
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double err = relative_error(a, numeric);
      if (err > result.max_rel_error)
        result = {err, result.checked, which, i, a, numeric};
      ++result.checked;
    }
  }
  return result;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("tcgen_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace tcgen::testing
