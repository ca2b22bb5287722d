// tests/test_audio.cpp

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

#include <cmath>
#include <filesystem>
#include <numeric>

#include "oracles.hpp"
#include "rvec/audio.hpp"
#include "rvec/augment.hpp"
#include "rvec/fbank.hpp"

using namespace rvec;

namespace {

AudioBuffer make_tone(double seconds, int rate, double freq, double amp = 0.5,
                      const std::string& utt = "u", const std::string& spk = "s",
                      const std::string& genre = "g") {
  AudioBuffer b;
  b.sample_rate = rate;
  b.utterance_id = utt;
  b.speaker_id = spk;
  b.genre = genre;
  const auto n = static_cast<std::size_t>(seconds * rate);
  b.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    b.samples[i] = static_cast<float>(amp * std::sin(2.0 * M_PI * freq * i / rate));
  return b;
}

AudioBuffer make_noise(std::size_t n, int rate, Rng& rng, double amp = 0.5) {
  AudioBuffer b;
  b.sample_rate = rate;
  b.samples.resize(n);
  for (auto& s : b.samples) s = static_cast<float>(amp * (2.0 * rng.uniform() - 1.0));
  return b;
}

double mean_square(const std::vector<float>& v) {
  double s = 0.0;
  for (float x : v) s += static_cast<double>(x) * x;
  return s / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("concat_short_utterances merges within speaker+genre groups") {
  std::vector<AudioBuffer> utts;
  for (int i = 0; i < 3; ++i)
    utts.push_back(make_tone(2.0, 16000, 200.0 + i, 0.4, "utt" + std::to_string(i), "spkA", "vlog"));

  auto out = concat_short_utterances(utts, 5.0);
  REQUIRE(out.size() == 1);
  CHECK(out[0].samples.size() == 3 * 2 * 16000);
  CHECK(out[0].utterance_id == "utt0");
  CHECK(out[0].speaker_id == "spkA");

  SECTION("long utterances pass through unchanged") {
    auto single = concat_short_utterances({make_tone(6.0, 16000, 220.0)}, 5.0);
    REQUIRE(single.size() == 1);
    CHECK(single[0].samples.size() == 6 * 16000);
  }

  SECTION("mixed sample rates are rejected") {
    auto bad = utts;
    bad.push_back(make_tone(2.0, 8000, 200.0, 0.4, "utt9", "spkA", "vlog"));
    CHECK_THROWS_AS(concat_short_utterances(bad, 5.0), Error);
  }
}

TEST_CASE("concat_short_utterances conserves samples and group boundaries") {
  Rng rng(11);
  std::vector<AudioBuffer> utts;
  const char* speakers[] = {"s1", "s2", "s3"};
  const char* genres[] = {"vlog", "drama"};
  std::size_t total = 0;
  for (int i = 0; i < 60; ++i) {
    double dur = 0.5 + 6.0 * rng.uniform();
    auto u = make_tone(dur, 16000, 150.0 + i, 0.3, "u" + std::to_string(i),
                       speakers[rng.uniform_index(3)], genres[rng.uniform_index(2)]);
    total += u.samples.size();
    utts.push_back(std::move(u));
  }

  auto out = concat_short_utterances(utts, 5.0);
  std::size_t total_out = 0;
  for (const auto& u : out) total_out += u.samples.size();
  CHECK(total_out == total);

  // per-group sample totals must be conserved too (no cross-group merging)
  std::map<std::pair<std::string, std::string>, std::size_t> in_group, out_group;
  for (const auto& u : utts) in_group[{u.speaker_id, u.genre}] += u.samples.size();
  for (const auto& u : out) out_group[{u.speaker_id, u.genre}] += u.samples.size();
  CHECK(in_group == out_group);

  // everything except possibly one leftover per group reaches the minimum
  std::map<std::pair<std::string, std::string>, int> short_count;
  for (const auto& u : out)
    if (u.samples.size() < 5 * 16000) short_count[{u.speaker_id, u.genre}]++;
  for (const auto& [key, count] : short_count) CHECK(count <= 1);
}

TEST_CASE("add_noise hits the requested SNR") {
  Rng rng(7);
  AudioBuffer clean = make_tone(1.0, 16000, 440.0);
  AudioBuffer noise = make_noise(16000, 16000, rng);

  SECTION("0 dB means equal powers") {
    AudioBuffer out = add_noise(clean, noise, 0.0);
    std::vector<float> added(out.samples.size());
    for (std::size_t i = 0; i < added.size(); ++i) added[i] = out.samples[i] - clean.samples[i];
    CHECK_THAT(mean_square(added) / mean_square(clean.samples),
               Catch::Matchers::WithinAbs(1.0, 1e-6));
  }

  SECTION("gain for 10 dB with unit-power inputs") {
    AudioBuffer uc = clean, un = noise;
    const double gc = std::sqrt(mean_square(uc.samples));
    const double gn = std::sqrt(mean_square(un.samples));
    for (auto& s : uc.samples) s = static_cast<float>(s / gc);
    for (auto& s : un.samples) s = static_cast<float>(s / gn);
    AudioBuffer out = add_noise(uc, un, 10.0);
    // g = 10^(-10/20)
    const double g = (out.samples[5] - uc.samples[5]) / un.samples[5];
    CHECK_THAT(g, Catch::Matchers::WithinAbs(0.31622776601683794, 1e-4));
  }

  SECTION("measured SNR within 0.01 dB across the range") {
    for (double snr : {-5.0, 0.0, 5.0, 15.0, 20.0}) {
      AudioBuffer out = add_noise(clean, noise, snr);
      std::vector<float> added(out.samples.size());
      for (std::size_t i = 0; i < added.size(); ++i)
        added[i] = out.samples[i] - clean.samples[i];
      const double measured =
          10.0 * std::log10(mean_square(clean.samples) / mean_square(added));
      CHECK_THAT(measured, Catch::Matchers::WithinAbs(snr, 0.01));
    }
  }

  SECTION("short noise is tiled to the clean length") {
    AudioBuffer short_noise = make_noise(1000, 16000, rng);
    AudioBuffer out = add_noise(clean, short_noise, 5.0);
    CHECK(out.samples.size() == clean.samples.size());
  }

  SECTION("silent inputs are rejected") {
    AudioBuffer silent = clean;
    std::fill(silent.samples.begin(), silent.samples.end(), 0.0f);
    CHECK_THROWS_AS(add_noise(silent, noise, 0.0), Error);
    CHECK_THROWS_AS(add_noise(clean, silent, 0.0), Error);
  }
}

TEST_CASE("reverberate") {
  AudioBuffer dry = make_tone(0.1, 16000, 300.0);

  SECTION("unit impulse is the identity") {
    AudioBuffer out = reverberate(dry, std::vector<float>{1.0f});
    for (std::size_t i = 0; i < dry.samples.size(); ++i)
      CHECK_THAT(out.samples[i], Catch::Matchers::WithinAbs(dry.samples[i], 1e-9));
  }

  SECTION("[0, 1] delays by one sample") {
    AudioBuffer out = reverberate(dry, std::vector<float>{0.0f, 1.0f});
    CHECK(out.samples.size() == dry.samples.size());
    CHECK_THAT(out.samples[0], Catch::Matchers::WithinAbs(0.0, 1e-9));
    for (std::size_t i = 1; i < out.samples.size(); ++i)
      CHECK_THAT(out.samples[i], Catch::Matchers::WithinAbs(dry.samples[i - 1], 1e-8));
  }

  SECTION("[0.5, 0.5] on a constant signal is a moving average") {
    AudioBuffer flat = dry;
    std::fill(flat.samples.begin(), flat.samples.end(), 0.6f);
    AudioBuffer out = reverberate(flat, std::vector<float>{0.5f, 0.5f});
    for (std::size_t i = 1; i < out.samples.size(); ++i)
      CHECK_THAT(out.samples[i], Catch::Matchers::WithinAbs(0.6, 1e-8));
  }

  SECTION("matches direct convolution") {
    Rng rng(3);
    AudioBuffer in = make_noise(800, 16000, rng);
    std::vector<float> rir(64);
    for (auto& v : rir) v = static_cast<float>(rng.normal() * 0.1);
    rir[0] = 1.0f;
    auto expected = oracles::direct_convolve(in.samples, rir);
    double peak = 0.0;
    for (std::size_t i = 0; i < in.samples.size(); ++i) peak = std::max(peak, std::abs(expected[i]));
    const double scale = peak > 1.0 ? 1.0 / peak : 1.0;
    AudioBuffer out = reverberate(in, rir);
    for (std::size_t i = 0; i < in.samples.size(); ++i)
      CHECK_THAT(out.samples[i], Catch::Matchers::WithinAbs(expected[i] * scale, 1e-6));
  }

  SECTION("peak never exceeds 1") {
    std::vector<float> hot(8, 2.0f);
    AudioBuffer out = reverberate(dry, hot);
    for (float s : out.samples) CHECK(std::abs(s) <= 1.0f + 1e-6f);
  }

  SECTION("all-zero impulse response is rejected") {
    CHECK_THROWS_AS(reverberate(dry, std::vector<float>{0.0f, 0.0f}), Error);
  }
}

TEST_CASE("speed_perturb lengths and identity") {
  AudioBuffer in = make_tone(1.0, 16000, 440.0);
  REQUIRE(in.samples.size() == 16000);

  SECTION("ratio 1.0 is the bitwise identity") {
    AudioBuffer out = speed_perturb(in, 1.0);
    CHECK(out.samples == in.samples);
  }

  SECTION("0.9 slows down: round(16000/0.9) = 17778 samples") {
    CHECK(speed_perturb(in, 0.9).samples.size() == 17778);
  }

  SECTION("1.1 speeds up: round(16000/1.1) = 14545 samples") {
    CHECK(speed_perturb(in, 1.1).samples.size() == 14545);
  }

  SECTION("sample rate is unchanged") {
    CHECK(speed_perturb(in, 0.9).sample_rate == 16000);
  }

  SECTION("non-positive ratio is rejected") {
    CHECK_THROWS_AS(speed_perturb(in, 0.0), Error);
    CHECK_THROWS_AS(speed_perturb(in, -1.0), Error);
  }

  SECTION("length contract |len(out) - len/ratio| <= 1 across sizes") {
    Rng rng(5);
    std::vector<std::size_t> lens{1, 2, 3, 17, 999, 4410, 123457, 1000000};
    for (int i = 0; i < 20; ++i) lens.push_back(1 + rng.uniform_index(1000000));
    for (std::size_t len : lens) {
      AudioBuffer b;
      b.sample_rate = 16000;
      b.samples.assign(len, 0.25f);
      for (double ratio : {0.9, 1.1}) {
        const double target = static_cast<double>(len) / ratio;
        const double got = static_cast<double>(speed_perturb(b, ratio).samples.size());
        CHECK(std::abs(got - target) <= 1.0);
      }
    }
  }
}

TEST_CASE("augment_online") {
  AudioBuffer in = make_tone(0.2, 16000, 500.0);
  AugmentConfig cfg;

  SECTION("probability zero is the identity") {
    cfg.apply_probability = 0.0;
    Rng rng(1);
    auto res = augment_online(in, cfg, {}, {}, rng);
    CHECK(res.audio.samples == in.samples);
    CHECK(res.speed_ratio == 1.0);
  }

  SECTION("probability one with ratios {0.9, 1.0} always applies 0.9") {
    cfg.apply_probability = 1.0;
    cfg.speed_ratios = {0.9, 1.0};
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
      Rng rng(seed);
      auto res = augment_online(in, cfg, {}, {}, rng);
      CHECK(res.speed_ratio == 0.9);
      CHECK(res.audio.samples.size() == static_cast<std::size_t>(std::llround(in.samples.size() / 0.9)));
    }
  }

  SECTION("ratios must contain 1.0") {
    cfg.speed_ratios = {0.9, 1.1};
    Rng rng(1);
    CHECK_THROWS_AS(augment_online(in, cfg, {}, {}, rng), Error);
  }

  SECTION("deterministic for a fixed seed") {
    Rng rng_noise(42);
    std::vector<AudioBuffer> noise_pool{make_noise(4000, 16000, rng_noise)};
    std::vector<std::vector<float>> rir_pool{{1.0f, 0.3f, 0.1f}};
    Rng a(123), b(123);
    auto ra = augment_online(in, cfg, noise_pool, rir_pool, a);
    auto rb = augment_online(in, cfg, noise_pool, rir_pool, b);
    CHECK(ra.speed_ratio == rb.speed_ratio);
    CHECK(ra.audio.samples == rb.audio.samples);
  }

  SECTION("each augmentation fires at the configured rate") {
    // isolate each augmentation and count how often the output changes
    const int trials = 10000;
    AudioBuffer probe = make_tone(0.02, 16000, 500.0);

    Rng rng_noise(42);
    std::vector<AudioBuffer> noise_pool{make_noise(400, 16000, rng_noise)};
    Rng rng1(1001);
    int fired = 0;
    AugmentConfig c1;  // speed ratios {1.0} only => speed never alters audio
    c1.speed_ratios = {1.0};
    for (int i = 0; i < trials; ++i)
      if (augment_online(probe, c1, noise_pool, {}, rng1).audio.samples != probe.samples) ++fired;
    CHECK(static_cast<double>(fired) / trials > 0.58);
    CHECK(static_cast<double>(fired) / trials < 0.62);

    std::vector<std::vector<float>> rir_pool{{0.5f, 0.5f}};
    Rng rng2(1002);
    fired = 0;
    for (int i = 0; i < trials; ++i)
      if (augment_online(probe, c1, {}, rir_pool, rng2).audio.samples != probe.samples) ++fired;
    CHECK(static_cast<double>(fired) / trials > 0.58);
    CHECK(static_cast<double>(fired) / trials < 0.62);

    Rng rng3(1003);
    fired = 0;
    AugmentConfig c3;
    for (int i = 0; i < trials; ++i)
      if (augment_online(probe, c3, {}, {}, rng3).speed_ratio != 1.0) ++fired;
    CHECK(static_cast<double>(fired) / trials > 0.58);
    CHECK(static_cast<double>(fired) / trials < 0.62);
  }
}

TEST_CASE("compute_fbank shapes and normalization") {
  AudioBuffer one_sec = make_tone(1.0, 16000, 440.0);

  SECTION("1 s at 16 kHz with 25 ms / 10 ms framing gives 98 x 80") {
    FeatureMatrix fm = compute_fbank(one_sec);
    CHECK(fm.rows == 98);
    CHECK(fm.cols == 80);
  }

  SECTION("column means are zero after normalization") {
    FeatureMatrix fm = compute_fbank(one_sec);
    for (int d = 0; d < fm.cols; ++d) {
      double mu = 0.0, var = 0.0;
      for (int t = 0; t < fm.rows; ++t) mu += fm.at(t, d);
      mu /= fm.rows;
      for (int t = 0; t < fm.rows; ++t) var += (fm.at(t, d) - mu) * (fm.at(t, d) - mu);
      const double sd = std::sqrt(var / fm.rows);
      CHECK(std::abs(mu) <= 1e-5 * (sd + 1e-12));
    }
  }

  SECTION("white noise produces finite features") {
    Rng rng(2);
    FeatureMatrix fm = compute_fbank(make_noise(16000, 16000, rng));
    for (float v : fm.data) CHECK(std::isfinite(v));
  }

  SECTION("audio shorter than one frame is rejected") {
    AudioBuffer tiny;
    tiny.sample_rate = 16000;
    tiny.samples.assign(100, 0.1f);  // 6.25 ms < 25 ms
    CHECK_THROWS_AS(compute_fbank(tiny), Error);
  }

  SECTION("no frames are dropped on silence-heavy audio") {
    // half the signal is silence; a voice activity detector would drop frames
    AudioBuffer half = make_tone(2.0, 16000, 440.0);
    std::fill(half.samples.begin() + 16000, half.samples.end(), 0.0f);
    FeatureMatrix fm = compute_fbank(half);
    CHECK(fm.rows == 1 + (32000 - 400) / 160);
  }
}

TEST_CASE("cmn") {
  SECTION("constant matrix becomes all zeros") {
    FeatureMatrix fm;
    fm.rows = 5;
    fm.cols = 3;
    fm.data.assign(15, 2.5f);
    FeatureMatrix out = cmn(fm);
    for (float v : out.data) CHECK(v == 0.0f);
  }

  SECTION("single frame becomes all zeros") {
    FeatureMatrix fm;
    fm.rows = 1;
    fm.cols = 4;
    fm.data = {1.0f, -2.0f, 3.0f, 4.0f};
    FeatureMatrix out = cmn(fm);
    for (float v : out.data) CHECK(v == 0.0f);
  }

  SECTION("idempotent") {
    Rng rng(9);
    FeatureMatrix fm;
    fm.rows = 40;
    fm.cols = 8;
    fm.data.resize(320);
    for (auto& v : fm.data) v = static_cast<float>(rng.normal());
    FeatureMatrix once = cmn(fm);
    FeatureMatrix twice = cmn(once);
    for (std::size_t i = 0; i < once.data.size(); ++i)
      CHECK_THAT(twice.data[i], Catch::Matchers::WithinAbs(once.data[i], 1e-12));
  }
}

TEST_CASE("wav and feature files round-trip") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "rvec_audio_test";
  fs::create_directories(dir);

  SECTION("wav save/load") {
    AudioBuffer in = make_tone(0.25, 16000, 440.0);
    const std::string path = (dir / "tone.wav").string();
    save_wav(path, in);
    AudioBuffer out = load_wav(path, 16000);
    REQUIRE(out.samples.size() == in.samples.size());
    CHECK(out.sample_rate == 16000);
    for (std::size_t i = 0; i < in.samples.size(); ++i)
      CHECK_THAT(out.samples[i], Catch::Matchers::WithinAbs(in.samples[i], 1.0 / 32768.0));
  }

  SECTION("wav loader resamples to the working rate") {
    AudioBuffer in = make_tone(0.5, 8000, 200.0);
    const std::string path = (dir / "tone8k.wav").string();
    save_wav(path, in);
    AudioBuffer out = load_wav(path, 16000);
    CHECK(out.sample_rate == 16000);
    CHECK(out.samples.size() == in.samples.size() * 2);
  }

  SECTION("feature dump round-trips bit-exactly") {
    FeatureMatrix fm = compute_fbank(make_tone(0.5, 16000, 330.0));
    const std::string path = (dir / "feats.fbnk").string();
    write_fbank(path, fm);
    FeatureMatrix back = read_fbank(path);
    CHECK(back.rows == fm.rows);
    CHECK(back.cols == fm.cols);
    CHECK(back.data == fm.data);
  }

  SECTION("bad feature magic is rejected") {
    const std::string path = (dir / "bad.fbnk").string();
    std::ofstream os(path, std::ios::binary);
    os.write("XXXX\x01\x00\x00\x00\x01\x00\x00\x00", 12);
    os.close();
    CHECK_THROWS_AS(read_fbank(path), Error);
  }
}
