#include <cstring>

#include "doctest.h"
#include "temp_dir.hpp"
#include "uiwf/checkpoint.hpp"
#include "uiwf/error.hpp"

using namespace uiwf;

namespace {

ModelConfig tiny() {
  ModelConfig c;
  c.input_width = 16;
  c.input_height = 8;
  c.conv1_channels = 2;
  c.conv2_channels = 3;
  c.backbone_dim = 4;
  c.heads = {{Level::SV, 3}, {Level::SVC, 5}};
  return c;
}

}  // namespace

TEST_CASE("checkpoint bytes round trip") {
  const auto p = init_params(tiny(), 8);
  const auto bytes = checkpoint_bytes(p);
  CHECK(std::memcmp(bytes.data(), kCheckpointMagic, 8) == 0);
  CHECK(parse_checkpoint(bytes) == p);
  CHECK(checkpoint_bytes(parse_checkpoint(bytes)) == bytes);

  testing_support::TempDir dir("ckpt");
  save_checkpoint(p, dir.path() / "a" / "model.bin");
  CHECK(load_checkpoint(dir.path() / "a" / "model.bin") == p);
}

TEST_CASE("corrupted checkpoints are rejected") {
  const auto bytes = checkpoint_bytes(init_params(tiny(), 8));
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 3)), ParseError);
  CHECK_THROWS_AS(parse_checkpoint(bytes + "x"), ParseError);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(bad_magic), ParseError);
  auto bad_config = bytes;
  bad_config[30] ^= 0x01;  // inside the config JSON, breaks the digest
  CHECK_THROWS_AS(parse_checkpoint(bad_config), ParseError);
  CHECK_THROWS_AS(load_checkpoint("/nonexistent/ckpt.bin"), IoError);
}

TEST_CASE("model config JSON round trip and digest") {
  const auto c = tiny();
  CHECK(model_config_from_json(to_json(c)) == c);
  auto d = c;
  d.backbone_dim = 5;
  CHECK(config_digest(c) != config_digest(d));
}

TEST_CASE("train config JSON: round trip, defaults and unknown keys") {
  TrainConfig c;
  c.epochs = 7;
  c.seed = 123456789012345ULL;
  c.adam.learning_rate = 3e-4;
  c.shl = SHLConfig::two_level();
  c.model.heads = {{Level::SV, 64}, {Level::SVC, 32}};
  const auto back = train_config_from_json(to_json(c));
  CHECK(back.epochs == 7);
  CHECK(back.seed == c.seed);
  CHECK(back.adam.learning_rate == 3e-4);
  CHECK(back.shl.levels == c.shl.levels);
  CHECK(back.model == c.model);

  const auto partial = train_config_from_json(nlohmann::json{{"levels", {"sv", "svc"}}});
  CHECK(partial.shl.weight(Level::SV) == 0.5);
  CHECK(partial.shl.weight(Level::SVC) == 0.5);
  CHECK(partial.model.heads.size() == 2);

  const auto single = train_config_from_json(
      nlohmann::json{{"architecture", "single-task"}, {"levels", {"s", "sv", "svc"}}});
  CHECK(single.model.heads.size() == 1);
  CHECK(single.shl.weight(Level::S) == 0.2);

  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"epoch", 3}}), ParseError);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"epochs", "many"}}), ParseError);
  CHECK_THROWS_AS(train_config_from_json(nlohmann::json{{"epochs", 0}}), InvalidArgument);
}
