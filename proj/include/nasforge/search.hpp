#pragma once

// End-to-end search and training drivers. run_search alternates architecture
// distribution updates with shared-weight updates on a synthetic video task
// and writes every artifact needed to audit the run offline: a CSV log, a
// per-epoch distribution trace, the final distribution, the derived
// architecture, and an extracted standalone checkpoint. run_train fits one
// architecture from scratch and reports train/val accuracy.
//
// Schedule semantics: one epoch is one pass over the training split. Each
// step inside an epoch draws K architectures, scores them on a held-out
// validation minibatch, and applies one distribution update (after warm-up)
// plus one posterior-weighted shared-weight update. During warm-up the
// distribution is frozen and the K plans are weighted uniformly.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nasforge/arch_space.hpp"
#include "nasforge/checkpoint.hpp"
#include "nasforge/cost_model.hpp"
#include "nasforge/model.hpp"
#include "nasforge/parsec.hpp"
#include "nasforge/rng.hpp"
#include "nasforge/supernet.hpp"
#include "nasforge/synthetic.hpp"
#include "nasforge/tensor.hpp"
#include "nasforge/version.hpp"

namespace nasforge {

struct RunConfig {
  std::string space_id = "toy_search";
  SearchSpace space;
  SearchConfig search;
  SyntheticConfig data;
  // 0 derives the dataset seed from the search seed. A nonzero value pins the
  // dataset so repeated searches with different seeds share one benchmark
  // instance and differ only in sampling, init, and minibatch order.
  std::uint64_t data_seed = 0;
  PatternMode pattern_mode = PatternMode::Fair;
  GloReConfig glore;
  int batch_size = 8;
  // Validation minibatch size for scoring candidates; 0 falls back to
  // batch_size. All candidates in a step share one minibatch, so enlarging it
  // cuts the noise in their likelihood comparison without touching training.
  int eval_batch_size = 0;
  // EMA momentum of the supernet's running statistics. Smaller values lengthen
  // the statistics' memory, which sharpens the scoring penalty on parts whose
  // entries lag behind the moving weights.
  double stats_momentum = 0.1;
  double val_fraction = 0.25;
  std::string out_dir;
};

namespace detail {

inline std::string hex64(std::uint64_t x) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(x));
  return buf;
}

inline std::string fmt_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace detail

// Canonical config serialization. out_dir is deliberately absent: the hash
// covers exactly the inputs that determine the run's results.
inline nlohmann::json run_config_to_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["version"] = "v1";
  j["space_id"] = cfg.space_id;
  j["space"] = space_to_json(cfg.space);
  j["search"] = {{"samples_per_step", cfg.search.samples_per_step},
                 {"target_flops", cfg.search.target_flops},
                 {"cost_weight", cfg.search.cost_weight},
                 {"entropy_weight", cfg.search.entropy_weight},
                 {"warmup_epochs", cfg.search.warmup_epochs},
                 {"total_epochs", cfg.search.total_epochs},
                 {"arch_optimizer",
                  {{"lr", cfg.search.arch_optimizer.lr},
                   {"beta1", cfg.search.arch_optimizer.beta1},
                   {"beta2", cfg.search.arch_optimizer.beta2},
                   {"eps", cfg.search.arch_optimizer.eps}}},
                 {"weight_optimizer",
                  {{"lr", cfg.search.weight_optimizer.lr},
                   {"momentum", cfg.search.weight_optimizer.momentum},
                   {"weight_decay", cfg.search.weight_optimizer.weight_decay}}},
                 {"seed", cfg.search.seed}};
  j["data"] = {{"num_clips", cfg.data.num_clips},
               {"frames", cfg.data.frames},
               {"spatial", cfg.data.spatial},
               {"num_classes", cfg.data.num_classes},
               {"noise", cfg.data.noise}};
  j["data_seed"] = cfg.data_seed;
  j["pattern_mode"] = pattern_mode_name(cfg.pattern_mode);
  j["glore"] = {{"reduce_div", cfg.glore.reduce_div}, {"node_div", cfg.glore.node_div}};
  j["batch_size"] = cfg.batch_size;
  j["eval_batch_size"] = cfg.eval_batch_size;
  j["stats_momentum"] = cfg.stats_momentum;
  j["val_fraction"] = cfg.val_fraction;
  return j;
}

// Parses a run config file. "space" may be a builtin id, a path to a space
// file (relative paths resolve against base_dir), or an inline space object.
inline RunConfig run_config_from_json(const nlohmann::json& j, const std::string& base_dir = ".") {
  require_v1(j, "run config");
  RunConfig cfg;
  const nlohmann::json& sp = j.at("space");
  if (sp.is_string()) {
    const std::string id = sp.get<std::string>();
    cfg.space_id = id;
    if (is_builtin_space(id)) {
      cfg.space = builtin_space(id);
    } else {
      std::filesystem::path p(id);
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      std::ifstream is(p);
      if (!is) throw std::runtime_error("run config: cannot open space file " + p.string());
      nlohmann::json js;
      is >> js;
      cfg.space = space_from_json(js);
    }
  } else {
    cfg.space_id = j.value("space_id", std::string("inline"));
    cfg.space = space_from_json(sp);
  }
  if (j.contains("search")) {
    const nlohmann::json& s = j.at("search");
    cfg.search.samples_per_step = s.value("samples_per_step", cfg.search.samples_per_step);
    cfg.search.target_flops = s.value("target_flops", cfg.search.target_flops);
    cfg.search.cost_weight = s.value("cost_weight", cfg.search.cost_weight);
    cfg.search.entropy_weight = s.value("entropy_weight", cfg.search.entropy_weight);
    cfg.search.warmup_epochs = s.value("warmup_epochs", cfg.search.warmup_epochs);
    cfg.search.total_epochs = s.value("total_epochs", cfg.search.total_epochs);
    cfg.search.seed = s.value("seed", cfg.search.seed);
    if (s.contains("arch_optimizer")) {
      const nlohmann::json& a = s.at("arch_optimizer");
      cfg.search.arch_optimizer.lr = a.value("lr", cfg.search.arch_optimizer.lr);
      cfg.search.arch_optimizer.beta1 = a.value("beta1", cfg.search.arch_optimizer.beta1);
      cfg.search.arch_optimizer.beta2 = a.value("beta2", cfg.search.arch_optimizer.beta2);
      cfg.search.arch_optimizer.eps = a.value("eps", cfg.search.arch_optimizer.eps);
    }
    if (s.contains("weight_optimizer")) {
      const nlohmann::json& w = s.at("weight_optimizer");
      cfg.search.weight_optimizer.lr = w.value("lr", cfg.search.weight_optimizer.lr);
      cfg.search.weight_optimizer.momentum = w.value("momentum", cfg.search.weight_optimizer.momentum);
      cfg.search.weight_optimizer.weight_decay =
          w.value("weight_decay", cfg.search.weight_optimizer.weight_decay);
    }
  }
  if (j.contains("data")) {
    const nlohmann::json& d = j.at("data");
    cfg.data.num_clips = d.value("num_clips", cfg.data.num_clips);
    cfg.data.frames = d.value("frames", cfg.data.frames);
    cfg.data.spatial = d.value("spatial", cfg.data.spatial);
    cfg.data.num_classes = d.value("num_classes", cfg.data.num_classes);
    cfg.data.noise = d.value("noise", cfg.data.noise);
  }
  cfg.data_seed = j.value("data_seed", cfg.data_seed);
  if (j.contains("pattern_mode")) {
    cfg.pattern_mode = parse_pattern_mode(j.at("pattern_mode").get<std::string>());
  }
  if (j.contains("glore")) {
    cfg.glore.reduce_div = j.at("glore").value("reduce_div", cfg.glore.reduce_div);
    cfg.glore.node_div = j.at("glore").value("node_div", cfg.glore.node_div);
  }
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.eval_batch_size = j.value("eval_batch_size", cfg.eval_batch_size);
  cfg.stats_momentum = j.value("stats_momentum", cfg.stats_momentum);
  cfg.val_fraction = j.value("val_fraction", cfg.val_fraction);
  cfg.out_dir = j.value("out_dir", cfg.out_dir);
  return cfg;
}

inline std::uint64_t config_hash(const RunConfig& cfg) {
  return fnv1a64(run_config_to_json(cfg).dump());
}

// Median single-clip FLOPs over n uniform draws; the default complexity
// target when none is configured, so the hinge is active on both sides.
inline double median_flops(const SearchSpace& space, Rng& rng, int n = 1000) {
  std::vector<double> flops;
  flops.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const ArchitectureSpec a = sample_uniform(space, rng);
    flops.push_back(static_cast<double>(cost_report(space, a).flops_total));
  }
  std::sort(flops.begin(), flops.end());
  const std::size_t m = flops.size() / 2;
  return flops.size() % 2 == 1 ? flops[m] : 0.5 * (flops[m - 1] + flops[m]);
}

struct SearchResult {
  ArchitectureSpec derived;
  double derived_flops = 0.0;
  double target_flops = 0.0;
  ArchParams alpha;
  std::string out_dir;
};

inline void check_run_config(const RunConfig& cfg) {
  if (cfg.search.samples_per_step < 1) {
    throw std::invalid_argument("search: samples_per_step must be >= 1");
  }
  if (cfg.search.warmup_epochs < 0 || cfg.search.total_epochs < cfg.search.warmup_epochs) {
    throw std::invalid_argument("search: need 0 <= warmup_epochs <= total_epochs");
  }
  if (cfg.search.cost_weight < 0.0) {
    throw std::invalid_argument("search: cost_weight must be >= 0");
  }
  if (cfg.search.entropy_weight < 0.0) {
    throw std::invalid_argument("search: entropy_weight must be >= 0");
  }
  if (cfg.batch_size < 1) throw std::invalid_argument("search: batch_size must be >= 1");
  if (cfg.eval_batch_size < 0) {
    throw std::invalid_argument("search: eval_batch_size must be >= 0");
  }
  if (!(cfg.stats_momentum > 0.0) || cfg.stats_momentum > 1.0) {
    throw std::invalid_argument("search: stats_momentum must be in (0, 1]");
  }
  if (!(cfg.val_fraction > 0.0) || !(cfg.val_fraction < 1.0)) {
    throw std::invalid_argument("search: val_fraction must be in (0, 1)");
  }
  if (cfg.space.input.channels != 3 || cfg.space.input.frames != cfg.data.frames ||
      cfg.space.input.spatial != cfg.data.spatial) {
    throw std::invalid_argument("search: space input shape does not match data settings");
  }
  if (cfg.space.head.num_classes != cfg.data.num_classes) {
    throw std::invalid_argument("search: space class count does not match data settings");
  }
  if (cfg.out_dir.empty()) throw std::invalid_argument("search: out_dir is required");
}

inline SearchResult run_search(const RunConfig& cfg) {
  check_run_config(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);

  const Rng root(cfg.search.seed);
  const std::uint64_t data_seed =
      cfg.data_seed ? cfg.data_seed : splitmix64(cfg.search.seed ^ fnv1a64("search.dataset"));
  const SyntheticVideoTask task = generate_dataset(cfg.data, data_seed);

  // Held-out tail of the (already shuffled) dataset scores candidates; the
  // head trains shared weights. Selection data never updates weights.
  const int n = cfg.data.num_clips;
  int n_val = std::max(1, static_cast<int>(std::lround(n * cfg.val_fraction)));
  if (n_val >= n) n_val = n - 1;
  if (n_val < 1) throw std::invalid_argument("search: need at least 2 clips");
  const int n_train = n - n_val;
  std::vector<int> train_idx, val_idx;
  for (int i = 0; i < n_train; ++i) train_idx.push_back(i);
  for (int i = n_train; i < n; ++i) val_idx.push_back(i);

  Supernet sn = build_supernet(cfg.space, cfg.pattern_mode,
                               splitmix64(cfg.search.seed ^ fnv1a64("search.supernet")),
                               cfg.glore);

  double target = cfg.search.target_flops;
  if (!(target > 0.0)) {
    Rng trng = root.split("target");
    target = median_flops(cfg.space, trng);
  }

  ArchParams alpha = init_params(cfg.space);
  ArchAdamState alpha_state;
  ParamSet velocity;
  Rng sample_rng = root.split("sample");
  // Scoring runs in eval mode against these statistics. A part refreshes its
  // entries only when a sampled candidate activates it, so under prefix
  // (naive) slicing the rarely drawn outer parts score through stale
  // statistics while fair selection keeps every part equally maintained.
  RunningStats run_stats = init_running_stats(sn);

  const int K = cfg.search.samples_per_step;
  const int B = std::min(cfg.batch_size, n_train);
  const int Bv = std::min(cfg.eval_batch_size > 0 ? cfg.eval_batch_size : cfg.batch_size, n_val);
  const int steps_per_epoch = (n_train + B - 1) / B;

  std::ofstream log(out / "search_log.csv");
  if (!log) throw std::runtime_error("search: cannot open search_log.csv");
  log << "epoch,most_probable_flops,mean_loglik,mean_hinge";
  for (std::size_t g = 0; g < cfg.space.groups.size(); ++g) {
    for (const char* ax : {"type", "channels", "expansion", "attention"}) {
      log << ",entropy_g" << g << "_" << ax;
    }
  }
  log << "\n";
  std::ofstream trace(out / "alpha_trace.jsonl");
  if (!trace) throw std::runtime_error("search: cannot open alpha_trace.jsonl");

  auto trace_line = [&](int epoch) {
    nlohmann::json row;
    row["epoch"] = epoch;
    nlohmann::json logits = nlohmann::json::array();
    for (const Tensor& t : alpha.logits) logits.push_back(t.v);
    row["logits"] = logits;
    trace << row.dump() << "\n";
  };

  std::size_t train_cursor = 0;
  std::size_t val_cursor = 0;
  auto next_indices = [](const std::vector<int>& pool, std::size_t& cursor, int count) {
    std::vector<int> out_idx;
    for (int i = 0; i < count; ++i) {
      out_idx.push_back(pool[cursor % pool.size()]);
      ++cursor;
    }
    return out_idx;
  };

  for (int epoch = 0; epoch < cfg.search.total_epochs; ++epoch) {
    const bool warm = epoch < cfg.search.warmup_epochs;
    double loglik_sum = 0.0;
    double hinge_sum = 0.0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      std::vector<ArchitectureSpec> archs;
      std::vector<ActivationPlan> plans;
      std::vector<double> costs;
      for (int k = 0; k < K; ++k) {
        SampledArch s = sample_architecture(cfg.space, alpha, sample_rng);
        costs.push_back(hinge_cost(
            static_cast<double>(cost_report(cfg.space, s.arch).flops_total), target));
        plans.push_back(activate(sn, s.arch));
        archs.push_back(std::move(s.arch));
      }

      const std::vector<int> vb = next_indices(val_idx, val_cursor, Bv);
      const Tensor val_batch = make_batch(task, vb);
      std::vector<int> val_labels;
      for (int i : vb) val_labels.push_back(task.labels[static_cast<std::size_t>(i)]);
      std::vector<double> logliks;
      for (int k = 0; k < K; ++k) {
        const ForwardLossResult r = forward_loss(sn, plans[static_cast<std::size_t>(k)],
                                                 val_batch, val_labels, false, &run_stats, true,
                                                 cfg.stats_momentum);
        if (!std::isfinite(r.loss)) {
          throw std::runtime_error("search: non-finite validation loss at epoch " +
                                   std::to_string(epoch));
        }
        double s = 0.0;
        for (double l : r.loglik) s += l;
        logliks.push_back(s / static_cast<double>(r.loglik.size()));
      }

      std::vector<double> w;
      if (warm) {
        w.assign(static_cast<std::size_t>(K), 1.0 / K);
      } else {
        w = posterior_weights(logliks, costs, cfg.search.cost_weight);
        std::vector<Tensor> grad = alpha_gradient(cfg.space, archs, w, alpha);
        if (cfg.search.entropy_weight > 0.0) {
          for (std::size_t ax = 0; ax < grad.size(); ++ax) {
            const std::vector<double> p = detail::softmax_vec(alpha.logits[ax]);
            double ent = 0.0;
            for (double q : p) ent -= q * std::log(std::max(q, 1e-300));
            for (std::size_t i = 0; i < p.size(); ++i) {
              grad[ax].v[i] += cfg.search.entropy_weight * p[i] *
                               (std::log(std::max(p[i], 1e-300)) + ent);
            }
          }
        }
        adam_step(alpha, grad, alpha_state, cfg.search.arch_optimizer);
      }

      const std::vector<int> tb = next_indices(train_idx, train_cursor, B);
      const Tensor train_batch = make_batch(task, tb);
      std::vector<int> train_labels;
      for (int i : tb) train_labels.push_back(task.labels[static_cast<std::size_t>(i)]);
      GradAccum accum;
      for (int k = 0; k < K; ++k) {
        const ForwardLossResult r = forward_loss(sn, plans[static_cast<std::size_t>(k)],
                                                 train_batch, train_labels, true, &run_stats,
                                                 false, cfg.stats_momentum);
        if (!std::isfinite(r.loss)) {
          throw std::runtime_error("search: non-finite training loss at epoch " +
                                   std::to_string(epoch));
        }
        for (const auto& [name, grad] : r.grads) {
          scatter_add(sn, plans[static_cast<std::size_t>(k)], name, grad,
                      w[static_cast<std::size_t>(k)], accum);
        }
      }
      sgd_step_masked(sn, accum, cfg.search.weight_optimizer, velocity);

      for (double l : logliks) loglik_sum += l;
      for (double c : costs) hinge_sum += c;
    }

    const ArchitectureSpec mp = most_probable(cfg.space, alpha);
    const double mp_flops = static_cast<double>(cost_report(cfg.space, mp).flops_total);
    const double denom = static_cast<double>(steps_per_epoch) * K;
    log << epoch << "," << detail::fmt_double(mp_flops) << ","
        << detail::fmt_double(loglik_sum / denom) << ","
        << detail::fmt_double(hinge_sum / denom);
    for (double h : axis_entropies(alpha)) log << "," << detail::fmt_double(h);
    log << "\n";
    log.flush();
    trace_line(epoch);
  }

  SearchResult res;
  res.derived = most_probable(cfg.space, alpha);
  res.derived.space_id = cfg.space_id;
  res.derived_flops = static_cast<double>(cost_report(cfg.space, res.derived).flops_total);
  res.target_flops = target;
  res.alpha = alpha;
  res.out_dir = cfg.out_dir;

  const std::string hash = detail::hex64(config_hash(cfg));
  {
    std::ofstream os(out / "derived_arch.json");
    os << arch_to_json(res.derived).dump(2) << "\n";
  }
  {
    nlohmann::json j;
    j["version"] = "v1";
    j["kind"] = "alpha_checkpoint";
    j["space_id"] = cfg.space_id;
    j["space"] = space_to_json(cfg.space);
    nlohmann::json logits = nlohmann::json::array();
    for (const Tensor& t : alpha.logits) logits.push_back(t.v);
    j["logits"] = logits;
    std::ofstream os(out / "alpha.json");
    os << j.dump(2) << "\n";
  }
  {
    std::map<std::string, std::string> meta = supernet_meta(sn);
    meta["config_hash"] = hash;
    meta["kind"] = "derived_standalone";
    save_params(extract_standalone(sn, res.derived), (out / "derived.ckpt.bin").string(),
                (out / "derived.ckpt.json").string(), meta);
  }
  {
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    nlohmann::json j;
    j["version"] = "v1";
    j["kind"] = "search_run";
    j["tool_version"] = kVersion;
    j["config_hash"] = hash;
    j["seed"] = cfg.search.seed;
    j["pattern_mode"] = pattern_mode_name(cfg.pattern_mode);
    j["space_hash"] = supernet_meta(sn).at("space_hash");
    j["target_flops"] = target;
    j["derived_flops"] = res.derived_flops;
    j["warmup_epochs"] = cfg.search.warmup_epochs;
    j["total_epochs"] = cfg.search.total_epochs;
    j["wall_clock_sec"] = wall;
    std::ofstream os(out / "manifest.json");
    if (!os) throw std::runtime_error("search: cannot open manifest.json");
    os << j.dump(2) << "\n";
  }
  return res;
}

// Reads an alpha checkpoint written by run_search and returns the most
// probable architecture it encodes.
inline ArchitectureSpec derive_from_alpha(const nlohmann::json& j) {
  require_v1(j, "alpha checkpoint");
  if (j.value("kind", std::string()) != "alpha_checkpoint") {
    throw std::runtime_error("alpha checkpoint: wrong kind");
  }
  const SearchSpace space = space_from_json(j.at("space"));
  ArchParams alpha = init_params(space);
  const nlohmann::json& logits = j.at("logits");
  if (logits.size() != alpha.logits.size()) {
    throw std::runtime_error("alpha checkpoint: axis count does not match space");
  }
  for (std::size_t a = 0; a < alpha.logits.size(); ++a) {
    const std::vector<double> v = logits[a].get<std::vector<double>>();
    if (v.size() != alpha.logits[a].v.size()) {
      throw std::runtime_error("alpha checkpoint: axis size does not match space");
    }
    alpha.logits[a].v = v;
  }
  ArchitectureSpec arch = most_probable(space, alpha);
  arch.space_id = j.value("space_id", std::string());
  return arch;
}

struct TrainConfig {
  int epochs = 100;
  int batch_size = 16;
  SgdConfig sgd{0.05, 0.9, 0.0};
  std::uint64_t seed = 0;
  double val_fraction = 0.25;
};

struct TrainReport {
  ParamSet params;
  RunningStats running;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
  double final_loss = 0.0;
};

namespace detail {

inline double accuracy(const SearchSpace& space, const ArchitectureSpec& arch,
                       const ParamSet& params, RunningStats& running, bool have_stats,
                       const SyntheticVideoTask& task, const std::vector<int>& indices,
                       int batch_size, const GloReConfig& glore) {
  int correct = 0;
  for (std::size_t at = 0; at < indices.size(); at += static_cast<std::size_t>(batch_size)) {
    std::vector<int> chunk(indices.begin() + static_cast<std::ptrdiff_t>(at),
                           indices.begin() +
                               static_cast<std::ptrdiff_t>(
                                   std::min(at + static_cast<std::size_t>(batch_size),
                                            indices.size())));
    const Tensor batch = make_batch(task, chunk);
    Tape tape;
    ForwardOptions opts;
    // Before any training step there are no accumulated statistics, so fall
    // back to per-batch normalization.
    opts.train = !have_stats;
    opts.running = have_stats ? &running : nullptr;
    const BoundModel bm = model_forward(tape, space, arch, params, batch, opts, glore);
    const Tensor& logits = tape.value(bm.logits);
    const int classes = logits.shape[1];
    for (std::size_t i = 0; i < chunk.size(); ++i) {
      int best = 0;
      for (int c = 1; c < classes; ++c) {
        const std::size_t base = i * static_cast<std::size_t>(classes);
        if (logits.v[base + static_cast<std::size_t>(c)] >
            logits.v[base + static_cast<std::size_t>(best)]) {
          best = c;
        }
      }
      if (best == task.labels[static_cast<std::size_t>(chunk[i])]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

}  // namespace detail

inline TrainReport run_train(const SearchSpace& space, const ArchitectureSpec& arch,
                             const SyntheticVideoTask& task, const TrainConfig& cfg,
                             const GloReConfig& glore = {}) {
  if (cfg.epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (!(cfg.val_fraction > 0.0) || !(cfg.val_fraction < 1.0)) {
    throw std::invalid_argument("train: val_fraction must be in (0, 1)");
  }
  const int n = static_cast<int>(task.clips.size());
  int n_val = std::max(1, static_cast<int>(std::lround(n * cfg.val_fraction)));
  if (n_val >= n) n_val = n - 1;
  if (n_val < 1) throw std::invalid_argument("train: need at least 2 clips");
  const int n_train = n - n_val;
  std::vector<int> train_idx, val_idx;
  for (int i = 0; i < n_train; ++i) train_idx.push_back(i);
  for (int i = n_train; i < n; ++i) val_idx.push_back(i);

  const Rng root(cfg.seed);
  TrainReport rep;
  rep.params = build_params(space, arch, splitmix64(cfg.seed ^ fnv1a64("train.params")), glore);
  ParamSet vel;
  const int B = std::min(cfg.batch_size, n_train);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    Rng erng = root.split("epoch", static_cast<std::uint64_t>(epoch));
    erng.shuffle(order);
    for (std::size_t at = 0; at < order.size(); at += static_cast<std::size_t>(B)) {
      std::vector<int> chunk(order.begin() + static_cast<std::ptrdiff_t>(at),
                             order.begin() +
                                 static_cast<std::ptrdiff_t>(std::min(
                                     at + static_cast<std::size_t>(B), order.size())));
      const Tensor batch = make_batch(task, chunk);
      std::vector<int> labels;
      for (int i : chunk) labels.push_back(task.labels[static_cast<std::size_t>(i)]);
      Tape tape;
      ForwardOptions opts;
      opts.train = true;
      opts.running = &rep.running;
      const BoundModel bm = model_forward(tape, space, arch, rep.params, batch, opts, glore);
      const LossResult lr = tape.softmax_cross_entropy(bm.logits, labels);
      rep.final_loss = tape.value(lr.loss).v[0];
      if (!std::isfinite(rep.final_loss)) {
        throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch));
      }
      tape.backward(lr.loss);
      for (std::size_t i = 0; i < bm.vars.size(); ++i) {
        Tensor& w = rep.params.at(bm.names[i]);
        if (!vel.has(bm.names[i])) vel.emplace(bm.names[i], Tensor(w.shape));
        sgd_update(w, tape.grad(bm.vars[i]), vel.at(bm.names[i]), cfg.sgd);
      }
    }
  }

  const bool have_stats = cfg.epochs > 0;
  rep.train_accuracy = detail::accuracy(space, arch, rep.params, rep.running, have_stats, task,
                                        train_idx, B, glore);
  rep.val_accuracy = detail::accuracy(space, arch, rep.params, rep.running, have_stats, task,
                                      val_idx, B, glore);
  return rep;
}

}  // namespace nasforge
