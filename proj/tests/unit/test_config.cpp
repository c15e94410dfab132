#include <doctest.h>

#include <fstream>

#include "../support.hpp"
#include "tcgen/config.hpp"
#include "tcgen/error.hpp"
#include "tcgen/provenance.hpp"

using namespace tcgen;

namespace {

Error capture(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  FAIL("expected an error");
  return Error(ErrorCode::kFormat, "");
}

}  // namespace

TEST_CASE("empty configuration gives the defaults") {
  const auto c = parse_config("");
  const PipelineConfig d;
  CHECK(c.to_json() == d.to_json());
  CHECK(c.frame_ms == 20.0);
  CHECK(c.cfg_scale == 7.5);
  CHECK(c.mix_ratio.weak == 1);
  CHECK(c.mix_ratio.strong == 2);
  CHECK(load_config("").to_json() == d.to_json());
}

TEST_CASE("values, comments and quoting") {
  const auto c = parse_config(
      "# frame settings\n"
      "frame_ms = 10\n"
      "model = \"toy\"   # preset\n"
      "mix_ratio = \"1:3\"\n"
      "disjoint_only = true\n"
      "lr = 5e-4\n");
  CHECK(c.frame_ms == 10.0);
  CHECK(c.frame_seconds() == 0.01);
  CHECK(c.model == "toy");
  CHECK(c.mix_ratio.strong == 3);
  CHECK(c.disjoint_only);
  CHECK(c.lr == 5e-4);
}

TEST_CASE("errors name the line") {
  const auto unknown = capture([] { parse_config("seed = 1\n\nframe_size = 3\n"); });
  CHECK(unknown.code() == ErrorCode::kUnknownKey);
  CHECK(unknown.position() == 3);
  CHECK(std::string(unknown.what()).find(":3") != std::string::npos);

  const auto type = capture([] { parse_config("seed = 1\nframe_ms = fast\n"); });
  CHECK(type.code() == ErrorCode::kTypeError);
  CHECK(type.position() == 2);

  CHECK(capture([] { parse_config("batch = -4\n"); }).code() == ErrorCode::kTypeError);
  CHECK(capture([] { parse_config("no equals sign\n"); }).code() == ErrorCode::kConfigParse);
  CHECK(capture([] { parse_config("model = \"toy\n"); }).code() == ErrorCode::kConfigParse);
  CHECK(capture([] { parse_config("sample_rate = 44100\n"); }).code() == ErrorCode::kTypeError);
}

TEST_CASE("overrides apply after the file") {
  const auto c = parse_config("frame_ms = 10\n", "<test>", {"frame_ms=40", "seed=9"});
  CHECK(c.frame_ms == 40.0);
  CHECK(c.seed == 9);
  const auto e = capture([] { parse_config("", "<test>", {"seed=1", "bogus=2"}); });
  CHECK(e.code() == ErrorCode::kUnknownKey);
  CHECK(std::string(e.what()).find("override:2") != std::string::npos);
}

TEST_CASE("config files load from disk") {
  const auto dir = testing::temp_dir("config");
  std::ofstream(dir / "a.cfg") << "seed = 42\nclip_seconds = 6.4\n";
  const auto c = load_config(dir / "a.cfg");
  CHECK(c.seed == 42);
  CHECK(c.clip_seconds == 6.4);
  CHECK_THROWS_AS(load_config(dir / "missing.cfg"), Error);
}

TEST_CASE("provenance hashes and sidecars") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  const auto dir = testing::temp_dir("provenance");
  std::ofstream(dir / "in.txt") << "hello";
  std::ofstream(dir / "out.txt") << "world";
  Provenance p{"encode", {{"frame_ms", 20}}, 3, {dir / "in.txt"}, {dir / "out.txt"}};
  const auto path = write_provenance(dir / "out.txt", p);
  CHECK(path == provenance_path(dir / "out.txt"));
  CHECK(std::filesystem::exists(path));
  CHECK(p.to_json() == p.to_json());
  CHECK(file_hash(dir / "in.txt").size() == 16);
}
