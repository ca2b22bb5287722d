// tests/test_net.cpp

// Copyright 2026  The rvec Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "oracles.hpp"
#include "rvec/net.hpp"

using namespace rvec;

namespace {

FeatureMatrix random_features(int rows, int cols, std::uint64_t seed) {
  Rng rng(seed);
  FeatureMatrix fm;
  fm.rows = rows;
  fm.cols = cols;
  fm.data.resize(static_cast<std::size_t>(rows) * cols);
  for (auto& v : fm.data) v = static_cast<float>(rng.normal());
  return fm;
}

// small custom architecture for cheap behavioral tests
NetSpec tiny_spec() {
  NetSpec spec;
  spec.kind = BlockKind::kBasic;
  spec.depths = {1, 1, 1, 1};
  spec.base_width = 8;
  spec.emb_dim = 32;
  spec.input_mels = 16;
  return spec;
}

}  // namespace

TEST_CASE("flatten and embedding dimensions match the architecture tables") {
  CHECK(NetSpec::resnet34().flatten_dim() == 5120);
  CHECK(NetSpec::resnet152().flatten_dim() == 20480);
  CHECK(NetSpec::resnet221().flatten_dim() == 20480);
  CHECK(NetSpec::resnet293().flatten_dim() == 20480);
  for (int code : {34, 152, 221, 293}) {
    CHECK(NetSpec::by_code(code).emb_dim == 256);
    CHECK(NetSpec::by_code(code).code() == code);
  }
  CHECK_THROWS_AS(NetSpec::by_code(50), Error);
}

TEST_CASE("stage-4 feature maps follow the output columns") {
  SECTION("34-layer basic net, 200 frames -> 10 x 25 x 256") {
    Network net = build_network(NetSpec::resnet34(), 1);
    StageTrace trace;
    Embedding e = forward(net, random_features(200, 80, 2), &trace);
    CHECK(trace.stem_shape == std::array<int, 3>{80, 200, 32});
    CHECK(trace.stage_shape[0] == std::array<int, 3>{80, 200, 32});
    CHECK(trace.stage_shape[1] == std::array<int, 3>{40, 100, 64});
    CHECK(trace.stage_shape[2] == std::array<int, 3>{20, 50, 128});
    CHECK(trace.stage_shape[3] == std::array<int, 3>{10, 25, 256});
    CHECK(trace.pooled_len == 5120);
    CHECK(e.vector.size() == 256);
  }

  SECTION("152-layer bottleneck net, 160 frames -> 10 x 20 x 1024") {
    Network net = build_network(NetSpec::resnet152(), 1);
    StageTrace trace;
    Embedding e = forward(net, random_features(160, 80, 3), &trace);
    CHECK(trace.stage_shape[0] == std::array<int, 3>{80, 160, 128});
    CHECK(trace.stage_shape[1] == std::array<int, 3>{40, 80, 256});
    CHECK(trace.stage_shape[2] == std::array<int, 3>{20, 40, 512});
    CHECK(trace.stage_shape[3] == std::array<int, 3>{10, 20, 1024});
    CHECK(trace.pooled_len == 20480);
    CHECK(e.vector.size() == 256);
  }
}

TEST_CASE("forward input validation") {
  Network net = build_network(tiny_spec(), 0);
  CHECK_THROWS_WITH(forward(net, random_features(7, 16, 1)),
                    Catch::Matchers::ContainsSubstring("8 frames"));
  CHECK_THROWS_AS(forward(net, random_features(20, 80, 1)), Error);  // wrong mel count
  CHECK_NOTHROW(forward(net, random_features(8, 16, 1)));
}

TEST_CASE("stats_pool") {
  SECTION("length is 2*F*C with the mean block first") {
    Tensor3 x(256, 10, 7);
    Rng rng(4);
    for (auto& v : x.v) v = static_cast<float>(rng.normal());
    auto pooled = stats_pool(x);
    REQUIRE(pooled.size() == 5120);
    for (int ci = 0; ci < x.c; ci += 37) {
      for (int fi = 0; fi < x.f; ++fi) {
        const double expect = oracles::naive_cell_mean(x, ci, fi);
        CHECK_THAT(pooled[static_cast<std::size_t>(fi) * x.c + ci],
                   Catch::Matchers::WithinAbs(expect, 1e-6));
      }
    }
  }

  SECTION("time-constant input: std block ~0, mean block = cell values") {
    Tensor3 x(3, 4, 9);
    for (int ci = 0; ci < 3; ++ci)
      for (int fi = 0; fi < 4; ++fi)
        for (int ti = 0; ti < 9; ++ti)
          x.v[(static_cast<std::size_t>(ci) * 4 + fi) * 9 + ti] = 0.5f * ci + 0.25f * fi;
    auto pooled = stats_pool(x);
    const std::size_t fc = 12;
    for (int ci = 0; ci < 3; ++ci)
      for (int fi = 0; fi < 4; ++fi) {
        const std::size_t cell = static_cast<std::size_t>(fi) * 3 + ci;
        CHECK_THAT(pooled[cell], Catch::Matchers::WithinAbs(0.5 * ci + 0.25 * fi, 1e-6));
        CHECK(std::abs(pooled[fc + cell]) <= 2e-5f);  // sqrt(eps) floor
      }
  }

  SECTION("single time step: std block ~0") {
    Tensor3 x(2, 2, 1);
    x.v = {1.0f, -2.0f, 3.0f, 4.0f};
    auto pooled = stats_pool(x);
    for (std::size_t i = 4; i < 8; ++i) CHECK(std::abs(pooled[i]) <= 2e-5f);
  }
}

TEST_CASE("constant zero input pools to identical embeddings across lengths") {
  Network net = build_network(tiny_spec(), 5);
  FeatureMatrix a, b;
  a.rows = 64;
  b.rows = 200;
  a.cols = b.cols = 16;
  a.data.assign(static_cast<std::size_t>(a.rows) * a.cols, 0.0f);
  b.data.assign(static_cast<std::size_t>(b.rows) * b.cols, 0.0f);
  CHECK(forward(net, a).vector == forward(net, b).vector);
}

TEST_CASE("builds and forwards are deterministic in the seed") {
  Network n1 = build_network(tiny_spec(), 77);
  Network n2 = build_network(tiny_spec(), 77);
  CHECK(n1.stem.w == n2.stem.w);
  CHECK(n1.emb.w == n2.emb.w);

  FeatureMatrix fm = random_features(32, 16, 6);
  CHECK(forward(n1, fm).vector == forward(n2, fm).vector);

  Network n3 = build_network(tiny_spec(), 78);
  CHECK(n3.stem.w != n1.stem.w);
}

TEST_CASE("batch forward equals per-utterance forward") {
  Network net = build_network(tiny_spec(), 9);
  std::vector<FeatureMatrix> batch;
  for (int i = 0; i < 4; ++i) batch.push_back(random_features(24 + 8 * i, 16, 100 + i));
  auto together = forward_batch(net, batch);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto solo = forward(net, batch[i]);
    REQUIRE(together[i].vector.size() == solo.vector.size());
    for (std::size_t d = 0; d < solo.vector.size(); ++d)
      CHECK_THAT(together[i].vector[d], Catch::Matchers::WithinAbs(solo.vector[d], 1e-5));
  }
}

TEST_CASE("parameter counts") {
  SECTION("34-layer count lands on the published 6.63M") {
    Network net = build_network(NetSpec::resnet34(), 0);
    const double with_emb = static_cast<double>(param_count(net, true));
    CHECK(std::abs(with_emb - 6.63e6) / 6.63e6 < 0.08);
    const long long without = param_count(net, false);
    CHECK(param_count(net, true) - without ==
          static_cast<long long>(net.emb.w.size() + net.emb.b.size()));
  }

  SECTION("deepening a stage strictly increases the count") {
    NetSpec a = tiny_spec();
    NetSpec b = a;
    b.depths[2] *= 2;
    CHECK(param_count(build_network(b, 0)) > param_count(build_network(a, 0)));
  }

  SECTION("invalid depths are rejected") {
    NetSpec bad = tiny_spec();
    bad.depths[1] = 0;
    CHECK_THROWS_AS(build_network(bad, 0), Error);
  }
}

TEST_CASE("network checkpoints round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rvec_net_test";
  fs::create_directories(dir);
  const std::string path = (dir / "net.rvwt").string();

  Network net = build_network(tiny_spec(), 21);
  save_network(path, net);
  Network back = load_network(path);
  CHECK(back.spec.depths == net.spec.depths);
  CHECK(back.stem.w == net.stem.w);
  CHECK(back.emb.w == net.emb.w);
  CHECK(back.stages[2][0].convs[1].w == net.stages[2][0].convs[1].w);

  FeatureMatrix fm = random_features(16, 16, 8);
  CHECK(forward(net, fm).vector == forward(back, fm).vector);

  SECTION("bad magic is rejected") {
    const std::string bad = (dir / "bad.rvwt").string();
    std::ofstream os(bad, std::ios::binary);
    os.write("NOPE\x00\x00\x00\x00\x00\x00\x00\x00", 12);
    os.close();
    CHECK_THROWS_AS(load_network(bad), Error);
  }

  SECTION("truncation is rejected") {
    std::ifstream is(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
    const std::string trunc = (dir / "trunc.rvwt").string();
    std::ofstream os(trunc, std::ios::binary);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    os.close();
    CHECK_THROWS_AS(load_network(trunc), Error);
  }
}
