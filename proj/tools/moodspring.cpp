#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "moodspring/data/csv.hpp"
#include "moodspring/data/dataset.hpp"
#include "moodspring/data/synthetic.hpp"
#include "moodspring/error.hpp"
#include "moodspring/service/config.hpp"
#include "moodspring/service/evaluate.hpp"
#include "moodspring/service/pipeline.hpp"
#include "moodspring/service/server.hpp"

using namespace moodspring;

namespace {

struct Common {
  std::string manifest;
  std::string models;
  std::string config;
  std::string embeddings;
};

service::EngineConfig engine_config(const std::string& path) {
  return path.empty() ? service::EngineConfig{} : service::load_config(path);
}

std::optional<data::EmbeddingTable> embedding_table(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return data::load_embedding_table(path);
}

const data::EmbeddingTable* ptr(const std::optional<data::EmbeddingTable>& t) { return t ? &*t : nullptr; }

int run_train(const Common& c, const std::string& modality, const std::string& model, const std::string& out,
              const std::string& target, const std::string& weighting, pipeline::TrainRequest req) {
  const auto m = data::parse_modality(modality);
  if (!m) fail(ErrorCode::InvalidInput, "unknown modality '" + modality + "'");
  req.modality = *m;
  req.kind = models::parse_model_kind(model);
  req.target = pipeline::parse_target(target);
  req.weight = text::parse_weight_mode(weighting);

  const auto cfg = engine_config(c.config);
  const auto manifest = data::load_manifest(c.manifest);
  const auto table = embedding_table(c.embeddings);
  auto classifier = pipeline::train_classifier(manifest, req, cfg.mapping, ptr(table));

  pipeline::ModelSet set;
  if (std::filesystem::exists(out)) set = pipeline::read_model_set(out);
  const bool had_fusion = set.fusion.has_value();
  const auto name = classifier.name;
  set.upsert(std::move(classifier));
  pipeline::write_model_set(out, set);
  std::cerr << "trained " << name << " on " << manifest.rows.size() << " manifest rows -> " << out << "\n";
  if (had_fusion) std::cerr << "note: the fusion layer in " << out << " was dropped; rerun train-fusion\n";
  return 0;
}

int run_train_fusion(const Common& c, fusion::TrainOptions opts, const std::string& out) {
  const auto cfg = engine_config(c.config);
  const auto manifest = data::load_manifest(c.manifest);
  const auto table = embedding_table(c.embeddings);
  auto set = pipeline::read_model_set(c.models);
  const auto data = pipeline::fusion_inputs(pipeline::collect_outputs(manifest, set, cfg.mapping, ptr(table)));

  auto baseline_opts = opts;
  baseline_opts.lambda = 0.0;
  set.fusion_baseline = fusion::train_fusion(data, baseline_opts);
  set.fusion = fusion::train_fusion(data, opts);
  const auto target = out.empty() ? c.models : out;
  pipeline::write_model_set(target, set);

  const auto terms = fusion::loss(set.fusion->w, set.fusion->b, data, opts.lambda, opts.delta);
  std::cerr << "fusion over " << data.size() << " samples: CE " << terms.cross_entropy << ", loss gap " << terms.gap
            << ", total " << terms.total << " -> " << target << "\n";
  return 0;
}

int run_evaluate(const Common& c, double delta, const std::string& json_out) {
  const auto cfg = engine_config(c.config);
  const auto manifest = data::load_manifest(c.manifest);
  const auto table = embedding_table(c.embeddings);
  const auto set = pipeline::read_model_set(c.models);
  const auto report = pipeline::evaluate(manifest, set, cfg.mapping, delta, ptr(table));
  const auto text = report.to_json().dump(2) + "\n";
  if (json_out.empty()) {
    std::cout << text;
  } else {
    data::write_file(json_out, text);
  }
  for (const auto& s : report.sources) {
    std::cerr << s.name << ": accuracy " << s.accuracy;
    if (s.disparity) std::cerr << ", disparity " << s.disparity->point << " <= " << s.disparity->upper;
    std::cerr << "\n";
  }
  return 0;
}

int run_serve(const Common& c, const std::string& address, unsigned short port) {
  auto cfg = engine_config(c.config);
  if (const char* env = std::getenv("MOODSPRING_ASR"); env != nullptr && *env != '\0') cfg.asr_endpoint = env;
  const auto set = std::make_shared<const pipeline::ModelSet>(pipeline::read_model_set(c.models));
  const auto asr = service::make_asr_client(cfg.asr_endpoint);

  // Block the stop signals before any thread starts so only sigwait sees them.
  sigset_t stop_signals;
  sigemptyset(&stop_signals);
  sigaddset(&stop_signals, SIGINT);
  sigaddset(&stop_signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

  service::Server server([set, cfg, asr] { return std::make_unique<service::Session>(set, cfg, asr); },
                         {address, port});
  server.start();
  std::cerr << "listening on ws://" << address << ":" << server.port() << "/session (" << set->classifiers.size()
            << " classifiers, asr " << (asr ? cfg.asr_endpoint : std::string("off")) << ")\n";
  int sig = 0;
  sigwait(&stop_signals, &sig);
  std::cerr << "stopping\n";
  server.stop();
  return 0;
}

int run_split(const std::string& manifest_path, double fraction, std::uint64_t seed, const std::string& train_out,
              const std::string& test_out) {
  const auto manifest = data::load_manifest(manifest_path);
  auto parts = data::split(manifest, fraction, seed);
  // Audio paths stay valid when the outputs sit next to the input manifest.
  data::save_manifest(train_out, parts.train);
  data::save_manifest(test_out, parts.test);
  std::cerr << "train " << parts.train.rows.size() << " rows, test " << parts.test.rows.size() << " rows\n";
  return 0;
}

int run_index_ravdess(const std::string& dir, const std::string& out) {
  data::Manifest manifest;
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".wav") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  const auto base = std::filesystem::absolute(std::filesystem::path(out)).parent_path();
  for (const auto& f : files) {
    const auto info = data::parse_ravdess_filename(f.filename().string());
    manifest.rows.push_back({f.stem().string() + ":audio",
                             std::filesystem::relative(std::filesystem::absolute(f), base).string(), info.emotion,
                             info.group, data::Modality::Audio});
  }
  data::save_manifest(out, manifest);
  std::cerr << "indexed " << manifest.rows.size() << " clips -> " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"moodspring: multimodal valence engine"};
  app.require_subcommand(1);

  Common common;
  pipeline::TrainRequest req;
  std::string modality;
  std::string model;
  std::string out;
  std::string target = "emotion";
  std::string weighting = "tfidf";
  auto* train = app.add_subcommand("train", "train one classifier into a model set");
  train->add_option("--manifest", common.manifest, "manifest CSV")->required()->check(CLI::ExistingFile);
  train->add_option("--modality", modality, "audio | text | embedding")->required();
  train->add_option("--model", model, "gaussian-nb | multinomial-nb | knn | linear-svm")->required();
  train->add_option("--out", out, "model set JSON (created or updated)")->required();
  train->add_option("--seed", req.seed, "training seed");
  train->add_option("--name", req.name, "classifier name (default <modality>-<model>)");
  train->add_option("--target", target, "emotion | valence");
  train->add_option("--text-features", weighting, "tf | tfidf");
  train->add_option("--min-df", req.min_df, "minimum document frequency");
  train->add_option("--k", req.hp.k, "neighbours for knn");
  train->add_option("--svm-lambda", req.hp.svm_lambda, "Pegasos regularization");
  train->add_option("--svm-epochs", req.hp.svm_epochs, "Pegasos epochs");
  train->add_option("--sample-rate", req.sample_rate, "audio feature rate in Hz");
  train->add_option("--embeddings", common.embeddings, "embedding table CSV")->check(CLI::ExistingFile);
  train->add_option("--config", common.config, "engine config (valence mapping)")->check(CLI::ExistingFile);

  fusion::TrainOptions fopts;
  auto* train_fusion = app.add_subcommand("train-fusion", "fit the fairness fusion layer (and its lambda=0 baseline)");
  train_fusion->add_option("--manifest", common.manifest)->required()->check(CLI::ExistingFile);
  train_fusion->add_option("--models", common.models, "model set JSON")->required()->check(CLI::ExistingFile);
  train_fusion->add_option("--lambda", fopts.lambda, "fairness weight");
  train_fusion->add_option("--lr", fopts.lr, "learning rate");
  train_fusion->add_option("--epochs", fopts.epochs, "full-batch epochs");
  train_fusion->add_option("--delta", fopts.delta, "Bernstein confidence level");
  train_fusion->add_option("--seed", fopts.seed, "recorded in the artifact");
  train_fusion->add_option("--out", out, "output model set (default: update --models)");
  train_fusion->add_option("--embeddings", common.embeddings)->check(CLI::ExistingFile);
  train_fusion->add_option("--config", common.config)->check(CLI::ExistingFile);

  double delta = 0.05;
  std::string json_out;
  auto* evaluate = app.add_subcommand("evaluate", "accuracy and Bernstein disparity report");
  evaluate->add_option("--manifest", common.manifest)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--models", common.models)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--delta", delta, "Bernstein confidence level");
  evaluate->add_option("--json-out", json_out, "write the report here instead of stdout");
  evaluate->add_option("--embeddings", common.embeddings)->check(CLI::ExistingFile);
  evaluate->add_option("--config", common.config)->check(CLI::ExistingFile);

  std::string address = "127.0.0.1";
  unsigned short port = 8765;
  auto* serve = app.add_subcommand("serve", "WebSocket session server at /session");
  serve->add_option("--models", common.models)->required()->check(CLI::ExistingFile);
  serve->add_option("--config", common.config)->check(CLI::ExistingFile);
  serve->add_option("--port", port);
  serve->add_option("--address", address);

  double fraction = 0.2;
  std::uint64_t split_seed = 0;
  std::string train_out;
  std::string test_out;
  auto* split = app.add_subcommand("split", "stratified train/test split of a manifest");
  split->add_option("--manifest", common.manifest)->required()->check(CLI::ExistingFile);
  split->add_option("--fraction", fraction, "test fraction")->check(CLI::Range(0.0, 1.0));
  split->add_option("--seed", split_seed);
  split->add_option("--train-out", train_out)->required();
  split->add_option("--test-out", test_out)->required();

  std::string ravdess_dir;
  auto* index = app.add_subcommand("index-ravdess", "manifest from a directory of RAVDESS clips");
  index->add_option("--dir", ravdess_dir)->required()->check(CLI::ExistingDirectory);
  index->add_option("--out", out)->required();

  data::SyntheticOptions synth_opts;
  std::string synth_dir;
  auto* synth = app.add_subcommand("synth-corpus", "write a small synthetic audio+text corpus with group tags");
  synth->add_option("--out", synth_dir, "output directory")->required();
  synth->add_option("--samples", synth_opts.samples);
  synth->add_option("--seed", synth_opts.seed);
  synth->add_option("--group-b-noise", synth_opts.group_b_noise, "extra noise amplitude on group B audio");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) return run_train(common, modality, model, out, target, weighting, req);
    if (*train_fusion) return run_train_fusion(common, fopts, out);
    if (*evaluate) return run_evaluate(common, delta, json_out);
    if (*serve) return run_serve(common, address, port);
    if (*split) return run_split(common.manifest, fraction, split_seed, train_out, test_out);
    if (*index) return run_index_ravdess(ravdess_dir, out);
    if (*synth) {
      const auto m = data::write_synthetic_corpus(synth_dir, synth_opts);
      std::cerr << "wrote " << m.rows.size() << " rows -> " << synth_dir << "/manifest.csv\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
