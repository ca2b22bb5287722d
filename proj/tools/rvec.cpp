// tools/rvec.cpp

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

// Command-line front end: feature extraction, embedding, head training,
// cohort building, trial scoring, evaluation, retrieval and fusion.
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rvec/rvec.hpp"

namespace {

struct ManifestRow {
  std::string utt;
  std::string spk;
  std::string path;
};

std::vector<ManifestRow> read_manifest(const std::string& path) {
  std::ifstream is(path);
  if (!is.good()) rvec::fail("cannot open manifest ", path);
  std::vector<ManifestRow> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto toks = rvec::detail::split_ws(line);
    if (toks.empty()) continue;
    if (toks.size() != 3)
      rvec::fail("manifest ", path, ": line ", lineno, ": expected \"utt spk wav-path\"");
    rows.push_back({toks[0], toks[1], toks[2]});
  }
  if (rows.empty()) rvec::fail("manifest ", path, " is empty");
  return rows;
}

/// Config-file fallback: use the key's value for options the user left at
/// their defaults.
template <typename T>
void config_fallback(const CLI::App* cmd, const std::string& flag,
                     const std::map<std::string, std::string>& cfg, const std::string& key,
                     T& value) {
  auto it = cfg.find(key);
  if (it == cfg.end() || cmd->count(flag) > 0) return;
  std::istringstream is(it->second);
  is >> value;
  if (is.fail()) rvec::fail("config: bad value for ", key, ": \"", it->second, "\"");
}

void config_fallback_str(const CLI::App* cmd, const std::string& flag,
                         const std::map<std::string, std::string>& cfg, const std::string& key,
                         std::string& value) {
  auto it = cfg.find(key);
  if (it == cfg.end() || cmd->count(flag) > 0) return;
  value = it->second;
}

bool parse_on_off(const std::string& v) {
  if (v == "on" || v == "true" || v == "1") return true;
  if (v == "off" || v == "false" || v == "0") return false;
  rvec::fail("expected on/off, got \"", v, "\"");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rvec: deep r-vector speaker verification evaluation toolkit"};
  app.require_subcommand(1);

  // ---- fbank -------------------------------------------------------------
  auto* cmd_fbank = app.add_subcommand("fbank", "Extract mean-normalized fbank features");
  std::string fb_wav, fb_out;
  int fb_rate = 16000, fb_mels = 80;
  double fb_len = 25.0, fb_shift = 10.0;
  cmd_fbank->add_option("--wav", fb_wav, "input 16-bit PCM mono WAV")->required();
  cmd_fbank->add_option("--out", fb_out, "output feature file")->required();
  cmd_fbank->add_option("--sample-rate", fb_rate, "working sample rate [16000]");
  cmd_fbank->add_option("--mels", fb_mels, "mel filter count [80]");
  cmd_fbank->add_option("--frame-length-ms", fb_len, "frame length in ms [25]");
  cmd_fbank->add_option("--frame-shift-ms", fb_shift, "frame shift in ms [10]");

  // ---- embed -------------------------------------------------------------
  auto* cmd_embed = app.add_subcommand("embed", "Extract utterance embeddings into a store");
  std::string em_list, em_feats, em_utt, em_spk, em_out, em_weights, em_save_weights;
  int em_spec = 34, em_rate = 16000;
  std::uint64_t em_seed = 0;
  bool em_concat = false;
  cmd_embed->add_option("--list", em_list, "manifest: one \"utt spk wav-path\" per line");
  cmd_embed->add_option("--feats", em_feats, "single feature file (requires --utt/--spk)");
  cmd_embed->add_option("--utt", em_utt, "utterance id for --feats");
  cmd_embed->add_option("--spk", em_spk, "speaker id for --feats");
  cmd_embed->add_option("--out", em_out, "output embedding store")->required();
  cmd_embed->add_option("--spec", em_spec, "architecture: 34, 152, 221 or 293 [34]");
  cmd_embed->add_option("--seed", em_seed, "weight initialization seed [0]");
  cmd_embed->add_option("--weights", em_weights, "load network weights instead of --spec/--seed");
  cmd_embed->add_option("--save-weights", em_save_weights, "save the network weights");
  cmd_embed->add_option("--sample-rate", em_rate, "working sample rate [16000]");
  cmd_embed->add_flag("--concat-by-speaker", em_concat,
                      "concatenate each speaker's audio and emit one embedding per speaker");

  // ---- train-head ----------------------------------------------------------
  auto* cmd_train = app.add_subcommand("train-head", "Train the AAM classifier head");
  std::string th_store, th_out, th_trace, th_init;
  int th_epochs = 30, th_batch = 128, th_classes = 0, th_restrict = 0;
  double th_margin = 0.2, th_scale = 32.0, th_lr_init = 0.1, th_lr_final = 0.00005;
  double th_momentum = 0.9, th_wd = 1e-4;
  std::uint64_t th_seed = 0;
  cmd_train->add_option("--store", th_store, "embedding store (labels = speaker ids)")->required();
  cmd_train->add_option("--out", th_out, "output head checkpoint")->required();
  cmd_train->add_option("--trace", th_trace, "loss trace output (epoch\\tlr\\tmean_loss)");
  cmd_train->add_option("--epochs", th_epochs, "training epochs [30]");
  cmd_train->add_option("--margin", th_margin, "AAM margin [0.2]");
  cmd_train->add_option("--scale", th_scale, "AAM scale [32]");
  cmd_train->add_option("--lr-init", th_lr_init, "initial learning rate [0.1]");
  cmd_train->add_option("--lr-final", th_lr_final, "final learning rate [5e-5]");
  cmd_train->add_option("--batch", th_batch, "mini-batch size [128]");
  cmd_train->add_option("--momentum", th_momentum, "SGD momentum [0.9]");
  cmd_train->add_option("--weight-decay", th_wd, "weight decay [1e-4]");
  cmd_train->add_option("--seed", th_seed, "shuffle/init seed [0]");
  cmd_train->add_option("--classes", th_classes, "class count [distinct speakers in store]");
  cmd_train->add_option("--init-head", th_init, "initialize from an existing head checkpoint");
  cmd_train->add_option("--restrict-classes", th_restrict,
                        "keep only the first N rows of --init-head before training");

  // ---- cohort --------------------------------------------------------------
  auto* cmd_cohort = app.add_subcommand("cohort", "Build the speaker-mean imposter cohort");
  std::string co_store, co_out;
  cmd_cohort->add_option("--store", co_store, "training embedding store")->required();
  cmd_cohort->add_option("--out", co_out, "output cohort store")->required();

  // ---- score ---------------------------------------------------------------
  auto* cmd_score = app.add_subcommand("score", "Score a trial list");
  std::string sc_trials, sc_enroll, sc_store, sc_cohort, sc_concat, sc_out, sc_report;
  std::string sc_strategy = "embavg", sc_asnorm = "on", sc_config;
  int sc_topk = 600;
  double sc_ptarget = 0.01;
  bool sc_norm_after = false;
  cmd_score->add_option("--trials", sc_trials, "trial file")->required();
  cmd_score->add_option("--enroll-map", sc_enroll, "enrollment map file")->required();
  cmd_score->add_option("--store", sc_store, "evaluation embedding store")->required();
  cmd_score->add_option("--cohort", sc_cohort, "cohort store (required with asnorm)");
  cmd_score->add_option("--concat-store", sc_concat,
                        "concatenated-enrollment store (required for uttconcat)");
  cmd_score->add_option("--out", sc_out, "output score file")->required();
  cmd_score->add_option("--report", sc_report, "also write an evaluation report");
  cmd_score->add_option("--strategy", sc_strategy, "uttconcat | embavg | scoreavg [embavg]");
  cmd_score->add_option("--asnorm", sc_asnorm, "adaptive score normalization on|off [on]");
  cmd_score->add_option("--top-k", sc_topk, "asnorm cohort top-K [600]");
  cmd_score->add_flag("--scoreavg-norm-after", sc_norm_after,
                      "scoreavg: normalize the averaged score instead of per-utterance scores");
  cmd_score->add_option("--p-target", sc_ptarget, "DCF target prior [0.01]");
  cmd_score->add_option("--config", sc_config, "key=value config file");

  // ---- evaluate --------------------------------------------------------------
  auto* cmd_eval = app.add_subcommand("evaluate", "Evaluate a score file against labeled trials");
  std::string ev_scores, ev_trials, ev_report, ev_curve, ev_config;
  double ev_ptarget = 0.01, ev_cmiss = 1.0, ev_cfa = 1.0;
  cmd_eval->add_option("--scores", ev_scores, "score file")->required();
  cmd_eval->add_option("--trials", ev_trials, "labeled trial file")->required();
  cmd_eval->add_option("--report", ev_report, "output report")->required();
  cmd_eval->add_option("--curve", ev_curve, "optional DET curve dump");
  cmd_eval->add_option("--p-target", ev_ptarget, "DCF target prior [0.01]");
  cmd_eval->add_option("--c-miss", ev_cmiss, "miss cost [1]");
  cmd_eval->add_option("--c-fa", ev_cfa, "false-alarm cost [1]");
  cmd_eval->add_option("--config", ev_config, "key=value config file");

  // ---- retrieve --------------------------------------------------------------
  auto* cmd_retr = app.add_subcommand("retrieve", "Rank a pool against each query");
  std::string rt_queries, rt_pool, rt_out, rt_cohort, rt_relevance;
  std::string rt_asnorm = "off";
  int rt_k = 10, rt_topk = 600;
  cmd_retr->add_option("--queries", rt_queries, "query embedding store")->required();
  cmd_retr->add_option("--pool", rt_pool, "pool embedding store")->required();
  cmd_retr->add_option("--out", rt_out, "output ranking file")->required();
  cmd_retr->add_option("--k", rt_k, "list length [10]");
  cmd_retr->add_option("--asnorm", rt_asnorm, "adaptive score normalization on|off [off]");
  cmd_retr->add_option("--cohort", rt_cohort, "cohort store (required with asnorm)");
  cmd_retr->add_option("--top-k", rt_topk, "asnorm cohort top-K [600]");
  cmd_retr->add_option("--relevance", rt_relevance,
                       "optional \"query utt\" relevance pairs; prints map=<value>");

  // ---- fuse -----------------------------------------------------------------
  auto* cmd_fuse = app.add_subcommand("fuse", "Fuse aligned score files");
  std::vector<std::string> fu_scores;
  std::vector<double> fu_mindcf, fu_weights;
  std::string fu_out;
  cmd_fuse->add_option("--scores", fu_scores, "score files (repeat per system)")->required();
  cmd_fuse->add_option("--mindcf", fu_mindcf, "per-system minDCF (weights = 1/minDCF)");
  cmd_fuse->add_option("--weights", fu_weights, "explicit fusion weights (override --mindcf)");
  cmd_fuse->add_option("--out", fu_out, "output fused score file")->required();

  // ---- convert-cnceleb --------------------------------------------------------
  auto* cmd_conv = app.add_subcommand("convert-cnceleb", "Convert CN-Celeb style lists");
  std::string cv_trials, cv_out_trials, cv_enroll, cv_out_enroll;
  cmd_conv->add_option("--trials", cv_trials, "CN-Celeb trial list");
  cmd_conv->add_option("--out-trials", cv_out_trials, "converted trial file");
  cmd_conv->add_option("--enroll", cv_enroll, "CN-Celeb enrollment list");
  cmd_conv->add_option("--out-enroll", cv_out_enroll, "converted enrollment map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (cmd_fbank->parsed()) {
      rvec::AudioBuffer wav = rvec::load_wav(fb_wav, fb_rate);
      rvec::FbankOptions opts;
      opts.n_mels = fb_mels;
      opts.frame_length_ms = fb_len;
      opts.frame_shift_ms = fb_shift;
      rvec::FeatureMatrix fm = rvec::compute_fbank(wav, opts);
      rvec::atomic_write(fb_out, [&](const std::string& tmp) { rvec::write_fbank(tmp, fm); });
      std::cout << "wrote " << fm.rows << " x " << fm.cols << " features to " << fb_out << "\n";
    }

    if (cmd_embed->parsed()) {
      rvec::Network net = em_weights.empty()
                              ? rvec::build_network(rvec::NetSpec::by_code(em_spec), em_seed)
                              : rvec::load_network(em_weights);
      if (!em_save_weights.empty())
        rvec::atomic_write(em_save_weights,
                           [&](const std::string& tmp) { rvec::save_network(tmp, net); });

      rvec::EmbeddingStore store;
      if (!em_list.empty()) {
        std::vector<ManifestRow> rows = read_manifest(em_list);
        if (em_concat) {
          std::map<std::string, std::vector<const ManifestRow*>> by_spk;
          for (const auto& r : rows) by_spk[r.spk].push_back(&r);
          for (auto& [spk, members] : by_spk) {
            std::sort(members.begin(), members.end(),
                      [](const ManifestRow* a, const ManifestRow* b) { return a->utt < b->utt; });
            rvec::AudioBuffer all;
            all.sample_rate = em_rate;
            all.utterance_id = spk;
            all.speaker_id = spk;
            for (const ManifestRow* r : members) {
              rvec::AudioBuffer w = rvec::load_wav(r->path, em_rate);
              all.samples.insert(all.samples.end(), w.samples.begin(), w.samples.end());
            }
            rvec::Embedding e = rvec::forward(net, rvec::compute_fbank(all));
            store.add(spk, spk, std::move(e.vector));
          }
        } else {
          for (const auto& r : rows) {
            rvec::AudioBuffer w = rvec::load_wav(r.path, em_rate);
            rvec::Embedding e = rvec::forward(net, rvec::compute_fbank(w));
            store.add(r.utt, r.spk, std::move(e.vector));
          }
        }
      } else if (!em_feats.empty()) {
        if (em_utt.empty() || em_spk.empty())
          rvec::fail("embed: --feats requires --utt and --spk");
        rvec::Embedding e = rvec::forward(net, rvec::read_fbank(em_feats));
        store.add(em_utt, em_spk, std::move(e.vector));
      } else {
        rvec::fail("embed: provide --list or --feats");
      }
      rvec::atomic_write(em_out, [&](const std::string& tmp) { rvec::write_store(tmp, store); });
      std::cout << "wrote " << store.size() << " embeddings to " << em_out << "\n";
    }

    if (cmd_train->parsed()) {
      rvec::EmbeddingStore store = rvec::read_store(th_store);
      std::map<std::string, int> class_of;
      for (const auto& [spk, utts] : store.by_speaker())
        class_of.emplace(spk, static_cast<int>(class_of.size()));
      if (th_classes == 0) th_classes = static_cast<int>(class_of.size());

      std::vector<std::pair<std::vector<double>, int>> dataset;
      for (const auto& [utt, rec] : store.records()) {
        std::vector<double> x(rec.vector.begin(), rec.vector.end());
        dataset.emplace_back(std::move(x), class_of.at(rec.speaker_id));
      }

      rvec::AamConfig cfg;
      cfg.scale = th_scale;
      cfg.margin = th_margin;
      cfg.num_classes = th_classes;
      rvec::StagePlan plan;
      plan.epochs = th_epochs;
      plan.lr_init = th_lr_init;
      plan.lr_final = th_lr_final;
      rvec::TrainOptions opts;
      opts.batch_size = th_batch;
      opts.momentum = th_momentum;
      opts.weight_decay = th_wd;

      std::optional<rvec::ClassifierHead> init;
      if (!th_init.empty()) {
        init = rvec::load_head(th_init);
        if (th_restrict > 0) init = rvec::restrict_head(*init, th_restrict);
      }
      rvec::TrainResult res = rvec::train_head(dataset, plan, cfg, th_seed,
                                               init ? &*init : nullptr, opts);
      rvec::atomic_write(th_out, [&](const std::string& tmp) { rvec::save_head(tmp, res.head); });
      if (!th_trace.empty()) rvec::atomic_write_text(th_trace, rvec::format_loss_trace(res));
      if (!res.epoch_loss.empty())
        std::cout << "trained " << cfg.num_classes << " classes; first-epoch loss "
                  << res.epoch_loss.front() << ", final " << res.epoch_loss.back() << "\n";
    }

    if (cmd_cohort->parsed()) {
      rvec::EmbeddingStore store = rvec::read_store(co_store);
      rvec::Cohort cohort = rvec::build_cohort(store);
      for (const auto& spk : cohort.excluded_speakers)
        std::cerr << "warning: excluding degenerate zero-mean cohort speaker " << spk << "\n";
      rvec::atomic_write(co_out, [&](const std::string& tmp) {
        rvec::write_store(tmp, rvec::cohort_to_store(cohort));
      });
      std::cout << "wrote cohort of " << cohort.size() << " speakers to " << co_out << "\n";
    }

    if (cmd_score->parsed()) {
      std::map<std::string, std::string> cfg;
      if (!sc_config.empty()) cfg = rvec::parse_config(sc_config);
      config_fallback(cmd_score, "--top-k", cfg, "top_k", sc_topk);
      config_fallback(cmd_score, "--p-target", cfg, "p_target", sc_ptarget);
      config_fallback_str(cmd_score, "--strategy", cfg, "strategy", sc_strategy);
      config_fallback_str(cmd_score, "--asnorm", cfg, "asnorm", sc_asnorm);

      rvec::TrialSet trials = rvec::parse_trials(sc_trials);
      rvec::parse_enrollment(sc_enroll, trials);
      rvec::EmbeddingStore store = rvec::read_store(sc_store);

      rvec::VerifyOptions opts;
      opts.strategy = rvec::strategy_from_name(sc_strategy);
      opts.asnorm = parse_on_off(sc_asnorm);
      opts.top_k = sc_topk;
      opts.scoreavg_norm_after = sc_norm_after;
      opts.dcf.p_target = sc_ptarget;

      std::optional<rvec::Cohort> cohort;
      if (opts.asnorm) {
        if (sc_cohort.empty()) rvec::fail("score: asnorm requires --cohort");
        cohort = rvec::cohort_from_store(rvec::read_store(sc_cohort));
      }
      std::optional<rvec::EmbeddingStore> concat_store;
      if (opts.strategy == rvec::Strategy::kUttConcat) {
        if (sc_concat.empty()) rvec::fail("score: uttconcat requires --concat-store");
        concat_store = rvec::read_store(sc_concat);
      }

      rvec::VerifyResult res = rvec::run_verification(
          trials, store, cohort ? &*cohort : nullptr, opts,
          concat_store ? &*concat_store : nullptr);
      rvec::atomic_write_text(sc_out, rvec::format_scores(res.scores));
      std::cout << "scored " << res.scores.scores.size() << " trials (" << res.chain << ")\n";
      if (!sc_report.empty()) {
        if (!res.report) rvec::fail("score: --report requires fully labeled trials");
        rvec::atomic_write_text(sc_report, res.report->format());
      }
    }

    if (cmd_eval->parsed()) {
      std::map<std::string, std::string> cfg;
      if (!ev_config.empty()) cfg = rvec::parse_config(ev_config);
      config_fallback(cmd_eval, "--p-target", cfg, "p_target", ev_ptarget);

      rvec::ScoreFile sf = rvec::read_scores(ev_scores);
      rvec::TrialSet trials = rvec::parse_trials(ev_trials);
      if (!trials.fully_labeled()) rvec::fail("evaluate: trial file is not fully labeled");
      if (trials.pairs.size() != sf.scores.size())
        rvec::fail("evaluate: ", sf.scores.size(), " scores vs ", trials.pairs.size(), " trials");
      std::vector<int> labels(trials.pairs.size());
      for (std::size_t i = 0; i < trials.pairs.size(); ++i) {
        if (sf.trials[i].first != trials.pairs[i].enroll_speaker ||
            sf.trials[i].second != trials.pairs[i].test_utterance)
          rvec::fail("evaluate: score line ", i + 1, " does not match the trial file");
        labels[i] = *trials.pairs[i].target ? 1 : 0;
      }
      rvec::DcfParams params{ev_ptarget, ev_cmiss, ev_cfa};
      rvec::EvalReport rep = rvec::evaluate_scores(sf.scores, labels, params);
      rvec::atomic_write_text(ev_report, rep.format());
      std::cout << rep.format();
      if (!ev_curve.empty())
        rvec::atomic_write_text(ev_curve,
                                rvec::format_det_curve(rvec::det_sweep(sf.scores, labels)));
    }

    if (cmd_retr->parsed()) {
      rvec::EmbeddingStore queries = rvec::read_store(rt_queries);
      rvec::EmbeddingStore pool = rvec::read_store(rt_pool);
      rvec::AsnormOptions norm;
      norm.enabled = parse_on_off(rt_asnorm);
      norm.top_k = rt_topk;
      std::optional<rvec::Cohort> cohort;
      if (norm.enabled) {
        if (rt_cohort.empty()) rvec::fail("retrieve: asnorm requires --cohort");
        cohort = rvec::cohort_from_store(rvec::read_store(rt_cohort));
        norm.cohort = &*cohort;
      }
      std::vector<std::pair<std::string, std::vector<float>>> qs;
      for (const auto& [utt, rec] : queries.records()) qs.emplace_back(utt, rec.vector);
      rvec::RetrievalResult res = rvec::retrieve_topk(qs, pool, rt_k, norm);
      if (res.clamped)
        std::cerr << "warning: k=" << rt_k << " exceeds pool size " << pool.size()
                  << "; returning the full ranking\n";
      rvec::atomic_write_text(rt_out, rvec::format_retrieval(res));
      if (!rt_relevance.empty()) {
        std::ifstream is(rt_relevance);
        if (!is.good()) rvec::fail("retrieve: cannot open ", rt_relevance);
        std::map<std::string, std::set<std::string>> rel;
        std::string line;
        while (std::getline(is, line)) {
          auto toks = rvec::detail::split_ws(line);
          if (toks.empty()) continue;
          if (toks.size() != 2) rvec::fail("retrieve: relevance lines must be \"query utt\"");
          rel[toks[0]].insert(toks[1]);
        }
        std::vector<std::vector<std::string>> rankings;
        std::vector<std::set<std::string>> relevance;
        for (const auto& qr : res.rankings) {
          auto it = rel.find(qr.query_id);
          if (it == rel.end()) rvec::fail("retrieve: no relevant ids for query ", qr.query_id);
          std::vector<std::string> ids;
          for (const auto& [utt, score] : qr.hits) ids.push_back(utt);
          rankings.push_back(std::move(ids));
          relevance.push_back(it->second);
        }
        std::cout << "map=" << std::setprecision(12)
                  << rvec::mean_average_precision(rankings, relevance, rt_k) << "\n";
      }
    }

    if (cmd_fuse->parsed()) {
      if (fu_scores.size() < 1) rvec::fail("fuse: need at least one score file");
      std::vector<rvec::ScoreFile> files;
      for (const auto& p : fu_scores) files.push_back(rvec::read_scores(p));
      for (std::size_t i = 1; i < files.size(); ++i)
        if (files[i].trials != files[0].trials)
          rvec::fail("fuse: score files are not aligned to one trial list (", fu_scores[i],
                     " differs from ", fu_scores[0], ")");
      std::vector<rvec::ScoreSet> sets;
      for (std::size_t i = 0; i < files.size(); ++i)
        sets.push_back({files[i].scores, fu_scores[i], ""});
      rvec::ScoreSet fused;
      if (!fu_weights.empty()) {
        fused = rvec::fuse_scores_weighted(sets, fu_weights);
      } else {
        if (fu_mindcf.size() != sets.size())
          rvec::fail("fuse: provide --mindcf per score file (or --weights)");
        fused = rvec::fuse_scores(sets, fu_mindcf);
      }
      rvec::ScoreFile out;
      out.trials = files[0].trials;
      out.scores = fused.scores;
      rvec::atomic_write_text(fu_out, rvec::format_scores(out));
      std::cout << "fused " << sets.size() << " systems: " << fused.chain << "\n";
    }

    if (cmd_conv->parsed()) {
      if (cv_trials.empty() && cv_enroll.empty())
        rvec::fail("convert-cnceleb: provide --trials and/or --enroll");
      if (!cv_trials.empty()) {
        if (cv_out_trials.empty()) rvec::fail("convert-cnceleb: --trials requires --out-trials");
        rvec::atomic_write_text(cv_out_trials, rvec::convert_cnceleb_trials(cv_trials));
      }
      if (!cv_enroll.empty()) {
        if (cv_out_enroll.empty()) rvec::fail("convert-cnceleb: --enroll requires --out-enroll");
        rvec::atomic_write_text(cv_out_enroll, rvec::convert_cnceleb_enroll(cv_enroll));
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
