#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "bird/config.hpp"
#include "bird/io.hpp"
#include "bird/rng.hpp"

using namespace bird;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

std::vector<uint8_t> slurp(const std::string& path) {
  const std::string s = read_text_file(path);
  return std::vector<uint8_t>(s.begin(), s.end());
}
}  // namespace

TEST_SUITE_BEGIN("io");

TEST_CASE("pgm round trip stays within quantization error") {
  Rng rng(1);
  Image img(1, 12, 17);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  const std::string path = temp_path("bird_test_roundtrip.pgm");
  write_image(path, img);
  const Image back = read_image(path);
  REQUIRE(back.height == 12);
  REQUIRE(back.width == 17);
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::fabs(back.pixels[static_cast<size_t>(i)] -
                    img.pixels[static_cast<size_t>(i)]) <=
          1.0f / 255.0f + 1e-9f);
  std::filesystem::remove(path);
}

TEST_CASE("ppm round trip for 3-channel images") {
  Rng rng(2);
  Image img(3, 6, 5);
  for (float& p : img.pixels) p = static_cast<float>(rng.uniform());
  const std::string path = temp_path("bird_test_roundtrip.ppm");
  write_image(path, img);
  const Image back = read_image(path);
  REQUIRE(back.channels == 3);
  for (int64_t i = 0; i < img.numel(); ++i)
    CHECK(std::fabs(back.pixels[static_cast<size_t>(i)] -
                    img.pixels[static_cast<size_t>(i)]) <=
          1.0f / 255.0f + 1e-9f);
  std::filesystem::remove(path);
}

TEST_CASE("2x2 P5 file maps bytes linearly to [0,1]") {
  const std::string path = temp_path("bird_test_p5.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n2 2\n255\n";
    const uint8_t bytes[4] = {0, 128, 255, 64};
    out.write(reinterpret_cast<const char*>(bytes), 4);
  }
  const Image img = read_image(path);
  CHECK(img.pixels[0] == 0.0f);
  CHECK(img.pixels[1] == doctest::Approx(128.0 / 255.0));
  CHECK(img.pixels[2] == 1.0f);
  CHECK(img.pixels[3] == doctest::Approx(64.0 / 255.0));
  std::filesystem::remove(path);
}

TEST_CASE("malformed image headers raise errors, not crashes") {
  const std::string path = temp_path("bird_test_bad.pgm");
  {
    std::ofstream out(path, std::ios::binary);
    out << "P7\n2 2\n255\n0000";
  }
  CHECK_THROWS_AS(read_image(path), std::runtime_error);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "P5\n2 2\n255\nX";  // truncated payload
  }
  CHECK_THROWS_AS(read_image(path), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("float tensor sidecar round trip is bitwise") {
  Rng rng(3);
  const Tensor t = random_normal<float>({3, 4, 5}, rng);
  const std::string path = temp_path("bird_test_tensor.ft");
  write_tensor_ft(path, t);
  const Tensor back = read_tensor_ft(path);
  CHECK(back.shape == t.shape);
  CHECK(back.data == t.data);
  std::filesystem::remove(path);
}

namespace {
Checkpoint make_test_checkpoint() {
  Checkpoint ckpt;
  ckpt.iteration = 123;
  DenoiserConfig cfg;
  cfg.hidden_width = 8;
  ckpt.params = init_params(5, cfg);
  for (auto& [name, t] : ckpt.params.named()) {
    (void)name;
    ckpt.opt.m.push_back(Tensor::zeros(t->shape));
    ckpt.opt.v.push_back(Tensor::full(t->shape, 0.25f));
  }
  ckpt.opt.step = 99;
  ckpt.feats = make_frozen_features(7);
  return ckpt;
}
}  // namespace

TEST_CASE("checkpoint: save-load-save produces identical bytes") {
  const Checkpoint ckpt = make_test_checkpoint();
  const std::string p1 = temp_path("bird_test_ckpt1.bird");
  const std::string p2 = temp_path("bird_test_ckpt2.bird");
  save_checkpoint(p1, ckpt);
  const Checkpoint loaded = load_checkpoint(p1);
  CHECK(loaded.iteration == 123);
  CHECK(loaded.opt.step == 99);
  CHECK(loaded.params.w_h1.data == ckpt.params.w_h1.data);
  CHECK(loaded.feats.w2.data == ckpt.feats.w2.data);
  save_checkpoint(p2, loaded);
  CHECK(slurp(p1) == slurp(p2));
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("checkpoint: corrupting one payload byte trips the CRC") {
  const Checkpoint ckpt = make_test_checkpoint();
  const std::string path = temp_path("bird_test_ckpt_corrupt.bird");
  save_checkpoint(path, ckpt);
  std::vector<uint8_t> bytes = slurp(path);
  bytes[bytes.size() / 2] ^= 0x01;  // somewhere inside tensor payloads
  write_binary_file_atomic(path, bytes);
  CHECK_THROWS_WITH_AS(load_checkpoint(path),
                       doctest::Contains("CRC mismatch"), std::runtime_error);
  std::filesystem::remove(path);
}

TEST_CASE("kv config parsing and overrides") {
  const KvFile kv = KvFile::parse_string(
      "# comment\niterations = 50\nlr=0.001\nvariant = forward_only\n\n"
      "gamma=2.5 # trailing comment\n");
  CHECK(kv.get_int("iterations", 0) == 50);
  CHECK(kv.get_double("lr", 0) == doctest::Approx(0.001));
  CHECK(kv.get_double("gamma", 0) == doctest::Approx(2.5));
  CHECK(kv.get_string("variant", "") == "forward_only");
  CHECK(kv.get_int("missing", 7) == 7);
  CHECK_THROWS(KvFile::parse_string("no_equals_sign\n"));

  TrainingConfig cfg = TrainingConfig::from_kv(kv);
  CHECK(cfg.iterations == 50);
  CHECK(cfg.variant == TrainVariant::forward_only);

  // Round trip through to_kv/from_kv preserves the config.
  const TrainingConfig cfg2 = TrainingConfig::from_kv(cfg.to_kv());
  CHECK(cfg2.iterations == cfg.iterations);
  CHECK(cfg2.lr == cfg.lr);
  CHECK(cfg2.gamma == cfg.gamma);
  CHECK(to_string(cfg2.variant) == to_string(cfg.variant));
}

TEST_CASE("config validation rejects bad values") {
  TrainingConfig cfg;
  cfg.iterations = 0;
  CHECK_THROWS(cfg.validate());
  cfg = TrainingConfig{};
  cfg.hr_size = 30;
  CHECK_THROWS(cfg.validate());
  cfg = TrainingConfig{};
  cfg.batch_k = 100;  // larger than corpus
  CHECK_THROWS(cfg.validate());
  CHECK_THROWS(variant_from_string("bogus"));
}

TEST_SUITE_END();
