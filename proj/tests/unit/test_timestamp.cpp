#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <set>

#include "../support.hpp"
#include "tcgen/timestamp.hpp"

using namespace tcgen;

namespace {

// Direct (frame x event x interval) construction.
std::vector<double> brute_force_matrix(const TimedCaption& c, const Embedder& embedder, double fd,
                                       std::size_t frames) {
  const std::size_t ch = embedder.dim();
  std::vector<double> out(frames * ch, 0.0);
  for (std::size_t t = 0; t < frames; ++t) {
    const double center = (static_cast<double>(t) + 0.5) * fd;
    for (const auto& e : c.events) {
      bool active = false;
      for (const auto& iv : e.intervals) active = active || (iv.onset <= center && center < iv.offset);
      if (!active) continue;
      const auto a = embedder.embed(e.description);
      for (std::size_t k = 0; k < ch; ++k) out[t * ch + k] += a[k];
    }
  }
  return out;
}

// Random caption whose interval boundaries sit on a 20 ms grid.
TimedCaption grid_caption(Rng& rng) {
  TimedCaption c = testing::random_caption(rng);
  for (auto& e : c.events)
    for (auto& iv : e.intervals) {
      iv.onset = std::round(iv.onset * 50.0) / 50.0;
      iv.offset = std::round(iv.offset * 50.0) / 50.0;
    }
  for (auto& e : c.events)
    std::erase_if(e.intervals, [](const Interval& iv) { return iv.length() <= 0.0; });
  std::erase_if(c.events, [](const TimedEvent& e) { return e.intervals.empty(); });
  return c;
}

}  // namespace

TEST_CASE("stub embedder is deterministic with unit norm") {
  const StubEmbedder stub(8);
  const auto a = stub.embed("a dog is barking");
  CHECK(a.size() == 8);
  CHECK(a == stub.embed("a dog is barking"));
  double norm = 0.0;
  for (double x : a) norm += x * x;
  CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-12);
  CHECK(a != stub.embed("rain is falling"));
  CHECK_THROWS_AS(embed_event("", stub), Error);
}

TEST_CASE("distinct token sets map to distinct stub vectors") {
  // The stub averages token vectors, so it only sees the set of tokens.
  const StubEmbedder stub(16);
  Rng rng(4);
  std::map<std::vector<double>, std::set<std::string>> seen;
  for (int i = 0; i < 300; ++i) {
    const std::string text = testing::random_description(rng);
    const auto tokens = whitespace_tokens(text);
    const std::set<std::string> bag(tokens.begin(), tokens.end());
    auto [it, inserted] = seen.emplace(stub.embed(text), bag);
    if (!inserted) CHECK(it->second == bag);
  }
  CHECK(seen.size() > 100);
}

TEST_CASE("frame count is robust to representation error") {
  CHECK(frame_count(10.0, 0.02) == 500);
  CHECK(frame_count(10.0, 0.01) == 1000);
  CHECK(frame_count(6.4, 0.2) == 32);
  CHECK(frame_count(0.05, 0.02) == 3);
  CHECK_THROWS_AS(frame_count(0.0, 0.02), Error);
}

TEST_CASE("one event on [0, 0.1] fills rows 0 to 4") {
  const StubEmbedder stub(8);
  const TimedCaption c{{{"a dog barks", {{0.0, 0.1}}}}, 10.0};
  const auto m = build_timestamp_matrix(c, stub);
  CHECK(m.frames == 500);
  const auto a = stub.embed("a dog barks");
  for (std::size_t t = 0; t < 5; ++t) CHECK(std::vector<double>(m.row(t).begin(), m.row(t).end()) == a);
  for (std::size_t t = 5; t < m.frames; ++t) CHECK(m.row_is_zero(t));
}

TEST_CASE("overlapping events sum, matching per-event matrices") {
  const StubEmbedder stub(8);
  const TimedCaption both{{{"dog", {{0.5, 1.5}}}, {"rain", {{1.0, 3.0}}}}, 4.0};
  const auto m = build_timestamp_matrix(both, stub);
  const auto m1 = build_timestamp_matrix({{both.events[0]}, 4.0}, stub);
  const auto m2 = build_timestamp_matrix({{both.events[1]}, 4.0}, stub);
  for (std::size_t i = 0; i < m.values.size(); ++i)
    CHECK(m.values[i] == doctest::Approx(m1.values[i] + m2.values[i]).epsilon(1e-15));
  const auto d = stub.embed("dog"), r = stub.embed("rain");
  const std::size_t t = 60;  // center 1.21 s
  for (std::size_t k = 0; k < 8; ++k) CHECK(m.row(t)[k] == d[k] + r[k]);
}

TEST_CASE("matrix matches the brute-force construction exactly") {
  const StubEmbedder stub(12);
  Rng rng(21);
  for (int i = 0; i < 200; ++i) {
    const auto c = testing::random_caption(rng);
    const auto m = build_timestamp_matrix(c, stub);
    const auto oracle = brute_force_matrix(c, stub, m.frame_duration, m.frames);
    CHECK(m.values == oracle);
    CHECK(build_timestamp_matrix(c, stub, kDefaultFrameSeconds, Execution::kSerial) == m);
  }
}

TEST_CASE("linearity over random splits of the events") {
  const StubEmbedder stub(6);
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const auto c = testing::random_caption(rng, 4);
    if (c.events.size() < 2) continue;
    const std::size_t cut = 1 + rng.below(c.events.size() - 1);
    TimedCaption a{{c.events.begin(), c.events.begin() + static_cast<long>(cut)}, c.duration};
    TimedCaption b{{c.events.begin() + static_cast<long>(cut), c.events.end()}, c.duration};
    const auto m = build_timestamp_matrix(c, stub);
    const auto ma = build_timestamp_matrix(a, stub), mb = build_timestamp_matrix(b, stub);
    for (std::size_t k = 0; k < m.values.size(); ++k)
      CHECK(std::abs(m.values[k] - ma.values[k] - mb.values[k]) < 1e-12);
  }
}

TEST_CASE("nonzero rows only where an event is active") {
  const StubEmbedder stub(6);
  Rng rng(13);
  for (int i = 0; i < 100; ++i) {
    const auto c = testing::random_caption(rng);
    const auto m = build_timestamp_matrix(c, stub);
    for (std::size_t t = 0; t < m.frames; ++t) {
      const double center = frame_center(t, m.frame_duration);
      bool active = false;
      for (const auto& e : c.events)
        for (const auto& iv : e.intervals) active = active || (iv.onset <= center && center < iv.offset);
      if (!active) CHECK(m.row_is_zero(t));
    }
  }
}

TEST_CASE("halving the frame duration doubles T and preserves rows") {
  const StubEmbedder stub(4);
  Rng rng(30);
  for (int i = 0; i < 50; ++i) {
    const auto c = grid_caption(rng);
    if (c.events.empty()) continue;
    const auto coarse = build_timestamp_matrix(c, stub, 0.02);
    const auto fine = build_timestamp_matrix(c, stub, 0.01);
    REQUIRE(fine.frames == 2 * coarse.frames);
    for (std::size_t t = 0; t < fine.frames; ++t)
      for (std::size_t k = 0; k < 4; ++k) CHECK(fine.row(t)[k] == coarse.row(t / 2)[k]);
  }
}

TEST_CASE("coarse placeholder") {
  const auto p = coarse_placeholder(10.0, 0.02, 8);
  CHECK(p.frames == 500);
  const auto row = placeholder_row(8);
  for (std::size_t t = 0; t < p.frames; ++t) {
    CHECK(std::vector<double>(p.row(t).begin(), p.row(t).end()) == row);
    CHECK_FALSE(p.row_is_zero(t));
  }
  CHECK(p == coarse_placeholder(10.0, 0.02, 8));
  CHECK(row[0] == 1.0 / std::sqrt(8.0));
}

TEST_CASE("frame matrix file round trip") {
  const StubEmbedder stub(5);
  const auto m = build_timestamp_matrix(parse_tdc("dog at 0.10-0.50 and rain at 0.30-0.90"), stub);
  const auto dir = testing::temp_dir("tsmx");
  write_frame_matrix(to_file(m), dir / "m.tsmx");
  const auto back = read_frame_matrix(dir / "m.tsmx");
  CHECK(back.frames == m.frames);
  CHECK(back.channels == 5);
  CHECK(back.frame_ms == 20.0f);
  for (std::size_t i = 0; i < m.values.size(); ++i) CHECK(back.values[i] == static_cast<float>(m.values[i]));
  std::ofstream(dir / "bad.tsmx") << "nope";
  CHECK_THROWS_AS(read_frame_matrix(dir / "bad.tsmx"), Error);
}

TEST_CASE("file embedder never falls back") {
  const auto dir = testing::temp_dir("embeddings");
  std::ofstream(dir / "e.jsonl") << R"({"text": "dog", "vector": [1, 0, 0]})" << '\n'
                                 << R"({"text": "rain", "vector": [0, 1, 0]})" << '\n';
  const auto fe = FileEmbedder::load(dir / "e.jsonl");
  CHECK(fe.dim() == 3);
  CHECK(fe.embed("rain") == std::vector<double>{0, 1, 0});
  CHECK_THROWS_AS(fe.embed("cat"), Error);
}
