// popgen: population-genomics clustering and classification pipeline CLI.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "popgen/dbn.hpp"
#include "popgen/dec.hpp"
#include "popgen/featurize.hpp"
#include "popgen/genio.hpp"
#include "popgen/kmeans.hpp"
#include "popgen/metrics.hpp"
#include "popgen/mlp.hpp"
#include "popgen/rbm.hpp"
#include "popgen/store.hpp"
#include "popgen/synthgen.hpp"

namespace fs = std::filesystem;
using namespace popgen;

namespace {

constexpr const char* kVersion = "0.1.0";

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// One directory per run; on collision a timestamped suffix keeps the old one.
fs::path prepare_outdir(const std::string& requested) {
  fs::path dir(requested);
  if (fs::exists(dir)) {
    const auto now = std::chrono::system_clock::now();
    const auto stamp = std::chrono::duration_cast<std::chrono::milliseconds>(
                           now.time_since_epoch())
                           .count();
    fs::path alt = dir;
    alt += "-" + std::to_string(stamp);
    int counter = 0;
    while (fs::exists(alt)) {
      alt = dir;
      alt += "-" + std::to_string(stamp) + "-" + std::to_string(++counter);
    }
    dir = alt;
  }
  fs::create_directories(dir);
  return dir;
}

using Report = std::vector<std::pair<std::string, std::string>>;

void write_report(const fs::path& dir, const Report& fields) {
  std::ofstream txt(dir / "report.txt");
  for (const auto& [k, v] : fields) txt << k << '=' << v << '\n';
  std::ofstream csv(dir / "report.csv");
  for (std::size_t i = 0; i < fields.size(); ++i)
    csv << (i ? "," : "") << fields[i].first;
  csv << '\n';
  for (std::size_t i = 0; i < fields.size(); ++i)
    csv << (i ? "," : "") << fields[i].second;
  csv << '\n';
}

struct RunContext {
  fs::path outdir;
  std::chrono::steady_clock::time_point start =
      std::chrono::steady_clock::now();
  Report summary;

  void finish() {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    std::ofstream out(outdir / "run_summary.txt");
    out << "version=" << kVersion << '\n';
    for (const auto& [k, v] : summary) out << k << '=' << v << '\n';
    out << "wall_time_seconds=" << format_double(secs) << '\n';
  }
};

// --------------------------------------------------------------------------
// Shared data-loading options
// --------------------------------------------------------------------------

struct DataOptions {
  std::vector<std::string> vcf_paths;
  std::string panel_path;
  std::int64_t min_alt = 12;
  std::string missing = "impute-zero";
  std::string scaling = "half";
  std::string level = "population";
};

void add_data_options(CLI::App* cmd, DataOptions& opts) {
  cmd->add_option("--vcf", opts.vcf_paths, "VCF input file(s), .gz accepted")
      ->required();
  cmd->add_option("--panel", opts.panel_path, "panel file")->required();
  cmd->add_option("--min-alt", opts.min_alt,
                  "minimum total alternate-allele count per variant");
  cmd->add_option("--missing", opts.missing, "impute-zero | drop-variant")
      ->check(CLI::IsMember({"impute-zero", "drop-variant"}));
  cmd->add_option("--scaling", opts.scaling, "none | half | unitnorm")
      ->check(CLI::IsMember({"none", "half", "unitnorm"}));
  cmd->add_option("--level", opts.level, "population | super-population")
      ->check(CLI::IsMember({"population", "super-population"}));
}

FeatureMatrix load_matrix(const DataOptions& opts) {
  FeaturizeOptions fopts;
  fopts.min_alt = opts.min_alt;
  fopts.missing = opts.missing == "drop-variant" ? MissingPolicy::DropVariant
                                                 : MissingPolicy::ImputeZero;
  std::vector<FeatureMatrix> parts;
  for (const auto& path : opts.vcf_paths) {
    auto source = open_line_source(path);
    VcfParser parser(*source);
    parts.push_back(build_feature_matrix(parser, fopts));
  }
  return parts.size() == 1 ? std::move(parts[0])
                           : merge_feature_matrices(parts);
}

LabeledDataset load_dataset(const DataOptions& opts) {
  auto matrix = load_matrix(opts);
  auto panel_source = open_line_source(opts.panel_path);
  const auto panel = parse_panel(*panel_source);
  return attach_labels(std::move(matrix), panel,
                       opts.level == "super-population"
                           ? LabelLevel::SuperPopulation
                           : LabelLevel::Population);
}

ScalingKind scaling_of(const DataOptions& opts) {
  return scaling_from_name(opts.scaling);
}

void summarize_data(RunContext& ctx, const DataOptions& opts,
                    const FeatureMatrix& fm) {
  std::string inputs;
  for (const auto& p : opts.vcf_paths) inputs += (inputs.empty() ? "" : ";") + p;
  ctx.summary.emplace_back("vcf", inputs);
  ctx.summary.emplace_back("panel", opts.panel_path);
  ctx.summary.emplace_back("min_alt", std::to_string(opts.min_alt));
  ctx.summary.emplace_back("missing", opts.missing);
  ctx.summary.emplace_back("scaling", opts.scaling);
  ctx.summary.emplace_back("samples", std::to_string(fm.rows()));
  ctx.summary.emplace_back("variants", std::to_string(fm.cols()));
  // settings hash ties artifacts back to the matrix they came from
  std::size_t h = std::hash<std::string>{}(
      opts.missing + "|" + opts.scaling + "|" + std::to_string(opts.min_alt) +
      "|" + std::to_string(fm.rows()) + "x" + std::to_string(fm.cols()));
  ctx.summary.emplace_back("featurize_hash", std::to_string(h));
}

void write_assignments(const fs::path& path,
                       const std::vector<std::string>& sample_ids,
                       const std::vector<std::size_t>& assignments) {
  std::ofstream out(path);
  out << "sample_id,cluster\n";
  for (std::size_t i = 0; i < sample_ids.size(); ++i)
    out << sample_ids[i] << ',' << assignments[i] << '\n';
}

Report clustering_report(const std::vector<std::size_t>& truth,
                         const std::vector<std::size_t>& assignment,
                         double wcss_value) {
  const auto score = clustering_score(truth, assignment);
  Report rep;
  rep.emplace_back("wcss", format_double(wcss_value));
  rep.emplace_back("ri", format_double(score.ri));
  rep.emplace_back("ari", format_double(score.ari));
  rep.emplace_back("nmi", format_double(score.nmi));
  rep.emplace_back("acc", format_double(score.acc));
  return rep;
}

Report classification_report(const ClassificationScore& score) {
  Report rep;
  rep.emplace_back("accuracy", format_double(score.accuracy));
  rep.emplace_back("weighted_precision",
                   format_double(score.weighted_precision));
  rep.emplace_back("weighted_recall", format_double(score.weighted_recall));
  rep.emplace_back("weighted_f1", format_double(score.weighted_f1));
  rep.emplace_back("rmse", format_double(score.rmse));
  return rep;
}

std::vector<std::string> read_label_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("FileOpen", path);
  std::vector<std::string> labels;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t comma = line.rfind(',');
    std::string value =
        comma == std::string::npos ? line : line.substr(comma + 1);
    if (first && (value == "label" || value == "cluster" ||
                  value == "prediction")) {
      first = false;
      continue;
    }
    first = false;
    labels.push_back(value);
  }
  return labels;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"population stratification pipeline"};
  app.set_config("--config", "", "key=value config file");
  app.require_subcommand(1);

  std::string out = "popgen-out";
  std::uint64_t seed = 42;
  std::size_t workers = 1;
  if (const char* env = std::getenv("POPGEN_WORKERS"))
    workers = static_cast<std::size_t>(std::strtoul(env, nullptr, 10));
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "master RNG seed")->capture_default_str();
  app.add_option("--workers", workers, "data-parallel worker cap");

  // ---- synth ----
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  CohortSpec cohort;
  synth->add_option("--populations", cohort.n_populations, "population count");
  synth->add_option("--samples", cohort.samples_per_population,
                    "samples per population");
  synth->add_option("--variants", cohort.n_variants, "variant count");
  synth->add_option("--divergence", cohort.divergence,
                    "between-population divergence in (0,1)");

  // ---- featurize ----
  auto* featurize_cmd =
      app.add_subcommand("featurize", "build the labeled feature matrix");
  DataOptions feat_opts;
  add_data_options(featurize_cmd, feat_opts);

  // ---- cluster-kmeans ----
  auto* km_cmd = app.add_subcommand("cluster-kmeans", "K-means clustering");
  DataOptions km_opts;
  add_data_options(km_cmd, km_opts);
  std::size_t km_k = 3, km_restarts = 100, km_max_iters = 300;
  km_cmd->add_option("--k", km_k, "number of clusters")->required();
  km_cmd->add_option("--restarts", km_restarts, "random restarts");
  km_cmd->add_option("--max-iters", km_max_iters, "Lloyd iteration cap");

  // ---- elbow ----
  auto* elbow_cmd = app.add_subcommand("elbow", "WCSS-vs-k sweep");
  DataOptions elbow_opts;
  add_data_options(elbow_cmd, elbow_opts);
  std::size_t elbow_kmin = 2, elbow_kmax = 10, elbow_restarts = 100;
  elbow_cmd->add_option("--k-min", elbow_kmin, "first k");
  elbow_cmd->add_option("--k-max", elbow_kmax, "last k");
  elbow_cmd->add_option("--restarts", elbow_restarts, "random restarts");

  // ---- cluster-dec ----
  auto* dec_cmd =
      app.add_subcommand("cluster-dec", "deep embedded clustering");
  DataOptions dec_opts;
  add_data_options(dec_cmd, dec_opts);
  DecConfig dec_config;
  std::size_t dec_k = 3;
  std::vector<std::size_t> dec_dims = {128, 32, 10};
  std::size_t dec_pretrain_iters = 2000, dec_finetune_iters = 2000;
  dec_cmd->add_option("--k", dec_k, "number of clusters")->required();
  dec_cmd->add_option("--dims", dec_dims, "autoencoder hidden dims");
  dec_cmd->add_option("--gamma", dec_config.gamma,
                      "reconstruction loss weight");
  dec_cmd->add_option("--tol", dec_config.tol, "stopping tolerance");
  dec_cmd->add_option("--alpha", dec_config.alpha, "Student-t dof");
  dec_cmd->add_option("--max-iters", dec_config.max_iterations,
                      "KL refinement iteration cap");
  dec_cmd->add_option("--pretrain-iters", dec_pretrain_iters,
                      "SAE iterations per layer");
  dec_cmd->add_option("--finetune-iters", dec_finetune_iters,
                      "autoencoder fine-tune iterations");

  // ---- train-mlp ----
  auto* mlp_cmd = app.add_subcommand("train-mlp", "train the MLP classifier");
  DataOptions mlp_opts;
  add_data_options(mlp_cmd, mlp_opts);
  MlpConfig mlp_config;
  std::vector<double> mlp_split = {0.6, 0.2, 0.2};
  mlp_cmd->add_option("--hidden", mlp_config.hidden_layers, "hidden widths");
  mlp_cmd->add_option("--epochs", mlp_config.epochs, "training epochs");
  mlp_cmd->add_option("--dropout", mlp_config.dropout.drop_probability,
                      "hidden-unit drop probability");
  mlp_cmd->add_option("--lr", mlp_config.optimizer.learning_rate,
                      "learning rate");
  mlp_cmd->add_option("--momentum", mlp_config.optimizer.momentum, "momentum");
  mlp_cmd->add_option("--batch", mlp_config.optimizer.batch_size,
                      "mini-batch size");
  mlp_cmd->add_option("--split", mlp_split, "train/test/validation fractions");

  // ---- train-dbn ----
  auto* dbn_cmd = app.add_subcommand("train-dbn", "train the DBN classifier");
  DataOptions dbn_opts;
  add_data_options(dbn_cmd, dbn_opts);
  DbnConfig dbn_config;
  std::vector<double> dbn_split = {0.6, 0.2, 0.2};
  dbn_cmd->add_option("--hidden", dbn_config.hidden_layers, "hidden widths");
  dbn_cmd->add_option("--pretrain-epochs", dbn_config.pretrain.epochs,
                      "CD-1 epochs per layer");
  dbn_cmd->add_option("--pretrain-lr", dbn_config.pretrain.learning_rate,
                      "CD-1 learning rate");
  dbn_cmd->add_option("--epochs", dbn_config.finetune_epochs,
                      "fine-tune epochs");
  dbn_cmd->add_option("--dropout",
                      dbn_config.finetune_dropout.drop_probability,
                      "fine-tune drop probability");
  dbn_cmd->add_option("--lr", dbn_config.finetune_optimizer.learning_rate,
                      "fine-tune learning rate");
  dbn_cmd->add_option("--batch", dbn_config.finetune_optimizer.batch_size,
                      "mini-batch size");
  dbn_cmd->add_option("--split", dbn_split, "train/test/validation fractions");

  // ---- evaluate ----
  auto* eval_cmd =
      app.add_subcommand("evaluate", "score predictions against truth");
  std::string truth_path, pred_path;
  eval_cmd->add_option("--truth", truth_path, "truth label CSV")->required();
  eval_cmd->add_option("--pred", pred_path, "predicted label CSV")->required();

  try {
    app.parse(argc, argv);

    RunContext ctx;
    ctx.outdir = prepare_outdir(out);
    ctx.summary.emplace_back("seed", std::to_string(seed));
    ctx.summary.emplace_back("workers", std::to_string(workers));

    if (*synth) {
      cohort.seed = seed;
      ctx.summary.emplace_back("task", "synth");
      std::ofstream vcf(ctx.outdir / "cohort.vcf");
      std::ofstream panel(ctx.outdir / "cohort.panel");
      generate_cohort(cohort, vcf, panel);
    } else if (*featurize_cmd) {
      ctx.summary.emplace_back("task", "featurize");
      auto ds = load_dataset(feat_opts);
      summarize_data(ctx, feat_opts, ds.matrix);
      save_matrix_cache(ds.matrix, (ctx.outdir / "matrix.manifest").string(),
                        (ctx.outdir / "matrix.bin").string());
      std::ofstream csv(ctx.outdir / "labeled.csv");
      export_labeled_csv(ds, csv);
    } else if (*km_cmd) {
      ctx.summary.emplace_back("task", "cluster-kmeans");
      auto ds = load_dataset(km_opts);
      summarize_data(ctx, km_opts, ds.matrix);
      const auto points = to_model_matrix(ds.matrix, scaling_of(km_opts));
      const auto model =
          kmeans_fit(points, km_k, km_max_iters, km_restarts, seed, workers);
      write_assignments(ctx.outdir / "assignments.csv", ds.matrix.sample_ids,
                        model.assignments);
      auto rep = clustering_report(ds.labels, model.assignments, model.wcss);
      rep.emplace_back("k", std::to_string(km_k));
      rep.emplace_back("iterations", std::to_string(model.iterations_run));
      write_report(ctx.outdir, rep);
    } else if (*elbow_cmd) {
      ctx.summary.emplace_back("task", "elbow");
      auto ds = load_dataset(elbow_opts);
      summarize_data(ctx, elbow_opts, ds.matrix);
      const auto points = to_model_matrix(ds.matrix, scaling_of(elbow_opts));
      std::vector<std::size_t> ks;
      for (std::size_t k = elbow_kmin; k <= elbow_kmax; ++k) ks.push_back(k);
      const auto report =
          elbow_sweep(points, ks, elbow_restarts, seed, workers);
      std::ofstream csv(ctx.outdir / "elbow.csv");
      csv << "k,wcss\n";
      for (const auto& [k, w] : report.entries)
        csv << k << ',' << format_double(w) << '\n';
    } else if (*dec_cmd) {
      ctx.summary.emplace_back("task", "cluster-dec");
      auto ds = load_dataset(dec_opts);
      summarize_data(ctx, dec_opts, ds.matrix);
      const auto points = to_model_matrix(ds.matrix, scaling_of(dec_opts));
      dec_config.seed = seed;
      dec_config.sae.dims = dec_dims;
      dec_config.sae.iterations_per_layer = dec_pretrain_iters;
      dec_config.sae.finetune_iterations = dec_finetune_iters;
      const auto state = train_dec(points, dec_k, dec_config);
      write_assignments(ctx.outdir / "assignments.csv", ds.matrix.sample_ids,
                        state.labels);
      const auto z = encode(state.autoencoder, points);
      std::ofstream emb(ctx.outdir / "embedding.csv");
      emb << "sample_id";
      for (std::size_t c = 0; c < z.cols(); ++c) emb << ",z_" << (c + 1);
      emb << ",cluster\n";
      for (std::size_t r = 0; r < z.rows(); ++r) {
        emb << ds.matrix.sample_ids[r];
        for (std::size_t c = 0; c < z.cols(); ++c)
          emb << ',' << format_double(z(r, c));
        emb << ',' << state.labels[r] << '\n';
      }
      std::ofstream hist(ctx.outdir / "history.csv");
      hist << "interval,kl_loss,recon_loss,label_change_fraction\n";
      for (const auto& s : state.history)
        hist << s.iteration << ',' << format_double(s.kl) << ','
             << format_double(s.reconstruction) << ','
             << format_double(s.label_change_fraction) << '\n';
      auto rep = clustering_report(ds.labels, state.labels, 0.0);
      rep.emplace_back("k", std::to_string(dec_k));
      write_report(ctx.outdir, rep);
    } else if (*mlp_cmd) {
      ctx.summary.emplace_back("task", "train-mlp");
      auto ds = load_dataset(mlp_opts);
      summarize_data(ctx, mlp_opts, ds.matrix);
      if (mlp_split.size() != 3)
        throw config_error("BadSplitSpec", "--split needs three fractions");
      SplitSpec split_spec{mlp_split[0], mlp_split[1], mlp_split[2], seed};
      const auto parts = split(ds, split_spec);
      mlp_config.seed = seed;
      mlp_config.scaling = scaling_of(mlp_opts);
      const auto model = train_mlp(parts.train, mlp_config);
      save_model(model, (ctx.outdir / "model.manifest").string(),
                 (ctx.outdir / "model.bin").string());
      std::ofstream hist(ctx.outdir / "history.csv");
      hist << "epoch,loss,accuracy\n";
      for (std::size_t e = 0; e < model.training_history.size(); ++e)
        hist << (e + 1) << ','
             << format_double(model.training_history[e].loss) << ','
             << format_double(model.training_history[e].accuracy) << '\n';
      const auto predictions = predict(model, parts.test.matrix);
      auto rep = classification_report(classification_score(
          parts.test.labels, predictions, ds.label_vocabulary));
      write_report(ctx.outdir, rep);
    } else if (*dbn_cmd) {
      ctx.summary.emplace_back("task", "train-dbn");
      auto ds = load_dataset(dbn_opts);
      summarize_data(ctx, dbn_opts, ds.matrix);
      if (dbn_split.size() != 3)
        throw config_error("BadSplitSpec", "--split needs three fractions");
      SplitSpec split_spec{dbn_split[0], dbn_split[1], dbn_split[2], seed};
      const auto parts = split(ds, split_spec);
      dbn_config.seed = seed;
      dbn_config.scaling = scaling_of(dbn_opts);
      const auto model = train_dbn(parts.train, dbn_config);
      save_model(model, (ctx.outdir / "model.manifest").string(),
                 (ctx.outdir / "model.bin").string());
      std::ofstream pre(ctx.outdir / "pretrain_history.csv");
      pre << "layer,epoch,reconstruction_error\n";
      for (std::size_t l = 0; l < model.pretrain_history.size(); ++l)
        for (std::size_t e = 0; e < model.pretrain_history[l].size(); ++e)
          pre << l << ',' << (e + 1) << ','
              << format_double(model.pretrain_history[l][e]) << '\n';
      std::ofstream hist(ctx.outdir / "history.csv");
      hist << "epoch,loss,accuracy\n";
      for (std::size_t e = 0; e < model.finetune_history.size(); ++e)
        hist << (e + 1) << ','
             << format_double(model.finetune_history[e].loss) << ','
             << format_double(model.finetune_history[e].accuracy) << '\n';
      const auto predictions = predict(model, parts.test.matrix);
      auto rep = classification_report(classification_score(
          parts.test.labels, predictions, ds.label_vocabulary));
      write_report(ctx.outdir, rep);
    } else if (*eval_cmd) {
      ctx.summary.emplace_back("task", "evaluate");
      const auto truth = read_label_column(truth_path);
      const auto pred = read_label_column(pred_path);
      if (truth.size() != pred.size())
        throw data_error("LengthMismatch",
                         "truth and prediction files differ in length");
      std::vector<std::string> vocab = truth;
      vocab.insert(vocab.end(), pred.begin(), pred.end());
      std::sort(vocab.begin(), vocab.end());
      vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
      auto index_of = [&](const std::string& s) {
        return static_cast<std::size_t>(
            std::lower_bound(vocab.begin(), vocab.end(), s) - vocab.begin());
      };
      std::vector<std::size_t> yt, yp;
      for (const auto& s : truth) yt.push_back(index_of(s));
      for (const auto& s : pred) yp.push_back(index_of(s));
      auto rep = classification_report(classification_score(yt, yp, vocab));
      const auto cs = clustering_score(yt, yp);
      rep.emplace_back("ri", format_double(cs.ri));
      rep.emplace_back("ari", format_double(cs.ari));
      rep.emplace_back("nmi", format_double(cs.nmi));
      rep.emplace_back("acc_matched", format_double(cs.acc));
      write_report(ctx.outdir, rep);
    }

    ctx.finish();
    std::cout << "output: " << ctx.outdir.string() << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case ErrorKind::Config: std::cerr << "category: ConfigError\n"; break;
      case ErrorKind::Data: std::cerr << "category: DataError\n"; break;
      case ErrorKind::Numeric: std::cerr << "category: NumericError\n"; break;
    }
    return static_cast<int>(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
}
