// affordance: command-line driver for every pipeline stage.
//
//   make-fixture -> mine -> cluster -> train-classifier -> train-vae -> evaluate
//   generate / score query trained models; serve exposes the annotation API;
//   replay re-runs the command recorded in a manifest.
//
// Every artifact gets a sibling <artifact>.manifest.json with the
// normalized argv, the full config, and input/output checksums. Options can
// also be set through AFFORDANCE_<OPTION> environment variables.
//
// Exit codes: 0 ok, 1 usage, 2 data error, 3 numeric divergence.

#include <CLI11.hpp>

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "affordance/clustering.hpp"
#include "affordance/corpus.hpp"
#include "affordance/dataset.hpp"
#include "affordance/pipeline.hpp"
#include "affordance/synthetic.hpp"
#include "artifacts.hpp"
#include "json_io.hpp"
#include "service.hpp"

namespace fs = std::filesystem;
using namespace affordance;
using namespace affordance::tool;

namespace {

struct Options {
  std::string workdir = ".";
  std::string corpus, dataset, vocab, classifier, vae, out;

  std::uint64_t fixture_seed = 1;
  int shows = 7;
  int scenes_per_show = 3;

  double tau_face = 24.0, tau_person = 0.5, tau_empty = 0.5;
  std::size_t window = 5;
  double match_threshold = 0.9;
  std::uint64_t featurizer_seed = 0;
  std::size_t feature_dim = 64;
  bool auto_annotate = false;

  std::string test_show, validation_show;

  std::size_t k = 30;
  std::uint64_t cluster_seed = 7;
  unsigned threads = 0;

  std::size_t epochs = 50, batch_size = 64, hidden = 512, latent = 30;
  double lr = 2e-4, beta1 = 0.5, beta2 = 0.999, kl_weight = 1.0;
  std::uint64_t train_seed = 0;

  std::size_t m = 10;
  std::uint64_t score_seed = 0;
  std::optional<double> delta;
  std::uint64_t negative_seed = 0;
  double negatives_per_positive = kDefaultNegativeRatio;
  std::size_t k_max = 5;

  std::string scene, point, joints;
  std::optional<std::uint64_t> record;
  std::size_t samples = 5;

  std::string host = "127.0.0.1";
  int port = 8080;

  std::string manifest;

  std::string in_workdir(const std::string& given, const char* name) const {
    return given.empty() ? (fs::path(workdir) / name).string() : given;
  }
  std::string corpus_path() const { return in_workdir(corpus, "fixture/corpus.tsv"); }
  std::string dataset_path() const { return in_workdir(dataset, "dataset.tsv"); }
  std::string vocab_path() const { return in_workdir(vocab, "vocab.txt"); }
  std::string classifier_path() const { return in_workdir(classifier, "classifier.params"); }
  std::string vae_path() const { return in_workdir(vae, "vae.params"); }

  TrainConfig train_config() const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = batch_size;
    c.adam.lr = lr;
    c.adam.beta1 = beta1;
    c.adam.beta2 = beta2;
    c.kl_weight = kl_weight;
    return c;
  }

  json config() const {
    json c = {{"workdir", workdir},
              {"corpus", corpus_path()},
              {"dataset", dataset_path()},
              {"vocab", vocab_path()},
              {"classifier", classifier_path()},
              {"vae", vae_path()},
              {"out", out},
              {"fixture_seed", fixture_seed},
              {"shows", shows},
              {"scenes_per_show", scenes_per_show},
              {"tau_face", tau_face},
              {"tau_person", tau_person},
              {"tau_empty", tau_empty},
              {"window", window},
              {"match_threshold", match_threshold},
              {"featurizer_seed", featurizer_seed},
              {"feature_dim", feature_dim},
              {"auto_annotate", auto_annotate},
              {"test_show", test_show},
              {"validation_show", validation_show},
              {"k", k},
              {"cluster_seed", cluster_seed},
              {"epochs", epochs},
              {"batch_size", batch_size},
              {"hidden", hidden},
              {"latent", latent},
              {"lr", lr},
              {"beta1", beta1},
              {"beta2", beta2},
              {"kl_weight", kl_weight},
              {"train_seed", train_seed},
              {"m", m},
              {"score_seed", score_seed},
              {"delta", delta ? json(*delta) : json(nullptr)},
              {"negative_seed", negative_seed},
              {"negatives_per_positive", negatives_per_positive},
              {"k_max", k_max},
              {"scene", scene},
              {"point", point},
              {"joints", joints},
              {"record", record ? json(*record) : json(nullptr)},
              {"samples", samples}};
    return c;
  }
};

/// Inputs and outputs of one command, turned into a manifest at the end.
struct Run {
  std::string command;
  json argv = json::array();
  json config;
  json inputs = json::object();
  json outputs = json::object();

  void input(const std::string& path) { inputs[path] = file_checksum(path); }
  void output(const std::string& path) { outputs[path] = file_checksum(path); }

  void finish(const std::string& primary, const json& extra = json::object()) {
    json m = {{"tool", "affordance"}, {"version", kToolVersion}, {"command", command},
              {"argv", argv},         {"config", config},        {"inputs", inputs},
              {"outputs", outputs}};
    m.update(extra);
    write_manifest(primary, m);
  }
};

void ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
}

Point2 parse_point(const std::string& s) {
  const auto parts = text::split(s, ',');
  Point2 p;
  if (parts.size() != 2 || !text::parse_double(parts[0], p.x) || !text::parse_double(parts[1], p.y)) {
    throw Error(ErrorKind::usage, "--point must look like X,Y");
  }
  return p;
}

Joints parse_joints(const std::string& s) {
  const auto parts = text::split(s, ',');
  if (parts.size() != 2 * kNumJoints) throw Error(ErrorKind::usage, "--joints needs 34 comma-separated numbers");
  Joints j;
  for (std::size_t i = 0; i < kNumJoints; ++i) {
    if (!text::parse_double(parts[2 * i], j[i].x) || !text::parse_double(parts[2 * i + 1], j[i].y)) {
      throw Error(ErrorKind::usage, "--joints contains a non-number");
    }
  }
  return j;
}

Dataset load_dataset(const Options& o, Run& run) {
  const auto path = o.dataset_path();
  require_artifact(path, "mine");
  run.input(path);
  return read_dataset(path);
}

RoleSplit role_split(const std::vector<AffordanceRecord>& positives, const Options& o, ShowRoles* roles_out = nullptr) {
  ShowRoles roles = default_roles(positives);
  if (!o.test_show.empty()) roles.test = o.test_show;
  if (!o.validation_show.empty()) roles.validation = o.validation_show == "none" ? "" : o.validation_show;
  if (roles_out) *roles_out = roles;
  return split_roles(positives, roles);
}

ModelBundle load_models(const Options& o, Run& run) {
  ModelBundle b = load_bundle(o.vocab_path(), o.classifier_path(), o.vae_path());
  run.input(o.vocab_path());
  run.input(o.classifier_path());
  run.input(o.vae_path());
  return b;
}

const AffordanceRecord& scene_record(const Dataset& ds, const std::string& scene) {
  const AffordanceRecord* best = nullptr;
  for (const auto& r : ds.records) {
    if (r.scene == scene && (!best || r.id < best->id)) best = &r;
  }
  if (!best) throw Error(ErrorKind::not_found, "no scene " + scene + " in the dataset");
  return *best;
}

void emit(const Options& o, Run& run, const json& out) {
  if (o.out.empty()) {
    std::cout << out.dump(2) << "\n";
    return;
  }
  ensure_parent(o.out);
  write_file_atomic(o.out, out.dump(2) + "\n");
  run.output(o.out);
  run.finish(o.out);
}

// ---------------------------------------------------------------------------
// Commands

void cmd_make_fixture(const Options& o, Run& run) {
  const std::string dir = o.out.empty() ? (fs::path(o.workdir) / "fixture").string() : o.out;
  synthetic::FixtureOptions f;
  f.seed = o.fixture_seed;
  f.shows = o.shows;
  f.scenes_per_show = o.scenes_per_show;
  if (f.shows < 2 || f.scenes_per_show < 1) throw Error(ErrorKind::usage, "need at least 2 shows and 1 scene per show");
  const std::string index = synthetic::make_fixture(dir, f);
  run.output(index);
  run.output((fs::path(dir) / "scores.bin").string());
  run.finish(index);
  std::cout << index << "\n";
}

void cmd_mine(const Options& o, Run& run) {
  const std::string index = o.corpus_path();
  require_artifact(index, "make-fixture");
  const Corpus corpus = read_corpus(index);
  run.input(index);
  run.input(corpus.resolve(corpus.scores));
  MiningConfig cfg;
  cfg.thresholds = {o.tau_face, o.tau_person, o.tau_empty};
  cfg.window_frames = o.window;
  cfg.match_threshold = o.match_threshold;
  cfg.featurizer_seed = o.featurizer_seed;
  cfg.feature_dim = o.feature_dim;
  cfg.auto_annotate = o.auto_annotate;
  MiningReport rep;
  const Dataset ds = mine(corpus, cfg, &rep);
  const std::string path = o.dataset_path();
  ensure_parent(path);
  write_dataset(ds, path);
  run.output(path);
  const json summary = {{"frames", rep.frames},     {"empty_frames", rep.empty_frames}, {"detections", rep.detections},
                        {"local", rep.local},       {"global", rep.global},             {"out_of_frame", rep.out_of_frame},
                        {"records", ds.records.size()}};
  run.finish(path, {{"mining", summary}});
  std::cout << summary.dump() << "\n";
}

void cmd_cluster(const Options& o, Run& run) {
  const Dataset ds = load_dataset(o, run);
  const auto positives = usable_positives(ds.records);
  if (positives.empty()) throw Error(ErrorKind::empty_input, "no accepted positives; annotate the dataset first");
  ShowRoles roles;
  const RoleSplit split = role_split(positives, o, &roles);
  if (split.train.empty()) throw Error(ErrorKind::empty_input, "no training positives after the show split");
  const unsigned threads = o.threads ? o.threads : std::max(1u, std::thread::hardware_concurrency());
  const auto poses = poses_of(split.train);
  const PoseVocabulary vocab = build_vocabulary(poses, o.k, o.cluster_seed, threads);
  const std::string path = o.vocab_path();
  ensure_parent(path);
  write_vocabulary(vocab, path);
  run.output(path);
  run.finish(path, {{"train_records", split.train.size()}, {"test_show", roles.test}, {"validation_show", roles.validation}});
  std::cout << "vocabulary " << vocab.size() << " classes from " << poses.size() << " poses, checksum "
            << file_checksum(path) << "\n";
}

struct TrainingInputs {
  Dataset dataset;
  PoseVocabulary vocab;
  RoleSplit split;
  std::string vocab_checksum;
};

TrainingInputs training_inputs(const Options& o, Run& run) {
  TrainingInputs t;
  t.dataset = load_dataset(o, run);
  require_artifact(o.vocab_path(), "cluster");
  run.input(o.vocab_path());
  t.vocab = read_vocabulary(o.vocab_path());
  t.vocab_checksum = file_checksum(o.vocab_path());
  t.split = role_split(usable_positives(t.dataset.records), o);
  if (t.split.train.empty()) throw Error(ErrorKind::empty_input, "no training positives");
  return t;
}

ModelDims model_dims(const Options& o, const TrainingInputs& t) {
  return {static_cast<std::size_t>(t.split.train.front().features->full.size()), t.vocab.size(), o.hidden, o.latent};
}

void cmd_train_classifier(const Options& o, Run& run) {
  const TrainingInputs t = training_inputs(o, run);
  const auto samples = classifier_samples(t.split.train, t.vocab);
  const ModelDims dims = model_dims(o, t);
  const auto trained = train_classifier(samples, dims, o.train_config(), o.train_seed);
  const std::string path = o.classifier_path();
  ensure_parent(path);
  nn::save_parameters(trained.model.params(), path);
  run.output(path);
  const auto& last = trained.log.back();
  run.finish(path, {{"dims", dims_json(dims)},
                    {"vocab_checksum", t.vocab_checksum},
                    {"featurizer_seed", t.dataset.featurizer_seed},
                    {"final", {{"loss", last.loss}, {"accuracy", last.accuracy}}}});
  std::cout << "classifier: " << samples.size() << " samples, final loss " << last.loss << ", train accuracy "
            << last.accuracy << "\n";
}

void cmd_train_vae(const Options& o, Run& run) {
  const TrainingInputs t = training_inputs(o, run);
  json cm;
  const ClassifierModel cls = load_model<ClassifierModel>(o.classifier_path(), "train-classifier", t.vocab_checksum, &cm);
  run.input(o.classifier_path());
  const auto samples = vae_samples(t.split.train, t.vocab);
  const ModelDims dims = model_dims(o, t);
  const auto trained = train_vae(samples, dims, o.train_config(), o.train_seed);

  const ScoringConfig scoring{o.m, o.score_seed, {}};
  double delta = 0.0;
  std::string delta_source;
  if (o.delta) {
    delta = *o.delta;
    delta_source = "flag";
  } else {
    const auto& pool = t.split.validation.empty() ? t.split.train : t.split.validation;
    delta_source = t.split.validation.empty() ? "train" : "validation";
    const LabeledSet val = with_negatives(pool, t.vocab, o.negative_seed, o.negatives_per_positive);
    delta = choose_delta(cls, trained.model, t.vocab, val, scoring);
  }

  const std::string path = o.vae_path();
  ensure_parent(path);
  nn::save_parameters(trained.model.params(), path);
  run.output(path);
  const auto& last = trained.log.back();
  run.finish(path, {{"dims", dims_json(dims)},
                    {"vocab_checksum", t.vocab_checksum},
                    {"classifier_checksum", file_checksum(o.classifier_path())},
                    {"featurizer_seed", t.dataset.featurizer_seed},
                    {"kl_weight", o.kl_weight},
                    {"m", o.m},
                    {"delta", delta},
                    {"delta_source", delta_source},
                    {"final", {{"loss", last.loss}, {"reconstruction", last.reconstruction}, {"kl", last.kl}}}});
  std::cout << "vae: " << samples.size() << " samples, final reconstruction " << last.reconstruction << ", kl "
            << last.kl << ", delta " << delta << " (" << delta_source << ")\n";
}

void cmd_generate(const Options& o, Run& run) {
  if (o.scene.empty() || o.point.empty()) throw Error(ErrorKind::usage, "generate needs --scene and --point");
  if (o.samples == 0) throw Error(ErrorKind::usage, "--samples must be at least 1");
  const Dataset ds = load_dataset(o, run);
  const ModelBundle b = load_models(o, run);
  const AffordanceRecord& proto = scene_record(ds, o.scene);
  const Point2 p = parse_point(o.point);
  const Image img = read_image(proto.image);
  if (p.x < 0 || p.y < 0 || p.x >= img.width() || p.y >= img.height()) {
    throw Error(ErrorKind::out_of_bounds, "--point lies outside the scene");
  }
  const RandomProjectionFeaturizer f(b.classifier.dims().feature_dim, b.featurizer_seed);
  const auto gen = generate_pose(b.classifier, b.vae, extract_scene_features(f, img, p), p, b.vocab, o.score_seed, o.samples);
  json poses = json::array();
  for (const auto& g : gen) poses.push_back(generated_json(g));
  emit(o, run, {{"scene", o.scene}, {"point", point_json(p)}, {"class_id", gen.front().class_id}, {"poses", poses}});
}

void cmd_score(const Options& o, Run& run) {
  const Dataset ds = load_dataset(o, run);
  const ModelBundle b = load_models(o, run);
  json out;
  if (o.record) {
    const auto it = std::find_if(ds.records.begin(), ds.records.end(), [&](const auto& r) { return r.id == *o.record; });
    if (it == ds.records.end()) throw Error(ErrorKind::not_found, "no record " + std::to_string(*o.record));
    const AffordanceRecord one[] = {*it};
    const double d = plausibility_distances(b.classifier, b.vae, b.vocab, one, {b.m, o.score_seed, {}}).front();
    out = {{"record", it->id}, {"distance", d}, {"delta", b.delta}, {"plausible", d < b.delta}};
  } else {
    if (o.scene.empty() || o.point.empty() || o.joints.empty()) {
      throw Error(ErrorKind::usage, "score needs --record, or --scene, --point and --joints");
    }
    const AffordanceRecord& proto = scene_record(ds, o.scene);
    const Point2 p = parse_point(o.point);
    const Image img = read_image(proto.image);
    if (p.x < 0 || p.y < 0 || p.x >= img.width() || p.y >= img.height()) {
      throw Error(ErrorKind::out_of_bounds, "--point lies outside the scene");
    }
    const RandomProjectionFeaturizer f(b.classifier.dims().feature_dim, b.featurizer_seed);
    const PoseScore s = score_pose(b.classifier, b.vae, extract_scene_features(f, img, p), p, Pose(parse_joints(o.joints)),
                                   b.m, b.vocab, o.score_seed, b.delta);
    out = {{"scene", o.scene}, {"point", point_json(p)}, {"distance", s.distance}, {"delta", b.delta},
           {"plausible", s.plausible}};
  }
  emit(o, run, out);
}

void cmd_evaluate(const Options& o, Run& run) {
  const Dataset ds = load_dataset(o, run);
  const ModelBundle b = load_models(o, run);
  ShowRoles roles;
  const RoleSplit split = role_split(usable_positives(ds.records), o, &roles);
  if (split.test.empty()) throw Error(ErrorKind::empty_input, "no test positives in show " + roles.test);
  const auto res = evaluate_model(b.classifier, b.vae, b.vocab, split.test, o.negative_seed, o.negatives_per_positive,
                                  {b.m, o.score_seed, {}}, o.k_max);

  double tp = 0, fp = 0;
  for (std::size_t i = 0; i < res.distances.size(); ++i) {
    if (res.distances[i] < b.delta) (res.set.positive[i] ? tp : fp) += 1;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp / static_cast<double>(res.report.positives);

  const std::string dir = o.out.empty() ? o.workdir : o.out;
  fs::create_directories(dir);
  const std::string json_path = (fs::path(dir) / "eval.json").string();
  const std::string txt_path = (fs::path(dir) / "eval.txt").string();
  const std::string csv_path = (fs::path(dir) / "pr.csv").string();
  json report = report_json(res.report);
  report["test_show"] = roles.test;
  report["delta"] = b.delta;
  report["at_delta"] = {{"precision", precision}, {"recall", recall}};
  write_file_atomic(json_path, report.dump(2) + "\n");
  std::string table = format_report_table(res.report);
  table += "delta         " + text::format_double(b.delta) + "\n";
  table += "test show     " + roles.test + "\n";
  write_file_atomic(txt_path, table);
  write_file_atomic(csv_path, pr_csv(res.report));
  run.output(json_path);
  run.output(txt_path);
  run.output(csv_path);
  run.finish(json_path);
  std::cout << table;
}

void cmd_serve(const Options& o, Run&) {
  const std::string path = o.dataset_path();
  require_artifact(path, "mine");
  ServiceOptions so;
  so.dataset_path = path;
  if (fs::exists(o.vocab_path()) && fs::exists(o.classifier_path()) && fs::exists(o.vae_path())) {
    so.models = load_bundle(o.vocab_path(), o.classifier_path(), o.vae_path());
  } else {
    std::cerr << "models not found; /api/predict is disabled (run `affordance train-vae` to enable it)\n";
  }
  AnnotationService service(std::move(so));
  if (!service.bind(o.host, o.port)) throw Error(ErrorKind::io, "cannot bind " + o.host + ":" + std::to_string(o.port));
  std::cout << "listening on http://" << o.host << ":" << o.port << std::endl;
  service.serve();
}

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::usage:
    case ErrorKind::invalid_k:
    case ErrorKind::bad_request: return 1;
    case ErrorKind::training_diverged: return 3;
    default: return 2;
  }
}

std::string env_name(const std::string& long_name) {
  std::string out = "AFFORDANCE_";
  for (char c : long_name) out += c == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

/// `--name=value` for every option that received a value on the command
/// line or from the environment.
json normalized_args(const CLI::App& app) {
  json out = json::array();
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->get_lnames().empty() || opt->results().empty()) continue;
    const std::string name = "--" + opt->get_lnames().front();
    if (name == "--help") continue;
    if (opt->get_expected_min() == 0) {
      if (opt->as<bool>()) out.push_back(name);
      continue;
    }
    for (const auto& v : opt->results()) out.push_back(name + "=" + v);
  }
  return out;
}

int run(std::vector<std::string> args) {
  Options o;
  CLI::App app{"affordance: mine, train and serve scene-conditioned pose models"};
  app.require_subcommand(1);
  app.add_option("--workdir", o.workdir, "Directory for default artifact paths")->capture_default_str();

  auto seed = [](CLI::App* c, std::uint64_t& v, const char* what) {
    c->add_option("--seed", v, what)->capture_default_str();
  };
  auto dataset = [&](CLI::App* c) { c->add_option("--dataset", o.dataset, "Dataset file (default <workdir>/dataset.tsv)"); };
  auto vocab = [&](CLI::App* c) { c->add_option("--vocab", o.vocab, "Vocabulary file (default <workdir>/vocab.txt)"); };
  auto models = [&](CLI::App* c) {
    vocab(c);
    c->add_option("--classifier", o.classifier, "Classifier checkpoint (default <workdir>/classifier.params)");
    c->add_option("--vae", o.vae, "VAE checkpoint (default <workdir>/vae.params)");
  };
  auto roles = [&](CLI::App* c) {
    c->add_option("--test-show", o.test_show, "Held-out show (default: last show in sorted order)");
    c->add_option("--validation-show", o.validation_show, "Threshold-selection show, or 'none'");
  };
  auto training = [&](CLI::App* c) {
    c->add_option("--epochs", o.epochs)->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--batch-size", o.batch_size)->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--hidden", o.hidden)->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--lr", o.lr)->capture_default_str()->check(CLI::PositiveNumber);
    c->add_option("--beta1", o.beta1)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    c->add_option("--beta2", o.beta2)->capture_default_str()->check(CLI::Range(0.0, 1.0));
    seed(c, o.train_seed, "Initialization and shuffling seed");
  };
  auto negatives = [&](CLI::App* c) {
    c->add_option("--negative-seed", o.negative_seed)->capture_default_str();
    c->add_option("--negatives-per-positive", o.negatives_per_positive, "Default 9572/3872")
        ->check(CLI::NonNegativeNumber);
  };
  auto out = [&](CLI::App* c, const char* what) { c->add_option("--out", o.out, what); };

  auto* fixture = app.add_subcommand("make-fixture", "Write the bundled synthetic corpus");
  out(fixture, "Output directory (default <workdir>/fixture)");
  seed(fixture, o.fixture_seed, "Fixture seed");
  fixture->add_option("--shows", o.shows)->capture_default_str();
  fixture->add_option("--scenes-per-show", o.scenes_per_show)->capture_default_str();

  auto* mine_cmd = app.add_subcommand("mine", "Filter empty frames and transfer detected poses into hypotheses");
  mine_cmd->add_option("--corpus", o.corpus, "Corpus index (default <workdir>/fixture/corpus.tsv)");
  dataset(mine_cmd);
  mine_cmd->add_option("--tau-face", o.tau_face, "Max face size in pixels")->capture_default_str();
  mine_cmd->add_option("--tau-person", o.tau_person)->capture_default_str();
  mine_cmd->add_option("--tau-empty", o.tau_empty)->capture_default_str();
  mine_cmd->add_option("--window", o.window, "Local transfer window in frames")->capture_default_str();
  mine_cmd->add_option("--match-threshold", o.match_threshold)->capture_default_str();
  mine_cmd->add_option("--featurizer-seed", o.featurizer_seed)->capture_default_str();
  mine_cmd->add_option("--feature-dim", o.feature_dim)->capture_default_str()->check(CLI::PositiveNumber);
  mine_cmd->add_flag("--auto-annotate", o.auto_annotate, "Accept in-frame hypotheses and reject the rest");

  auto* cluster = app.add_subcommand("cluster", "Build the pose vocabulary with k-medoids");
  dataset(cluster);
  vocab(cluster);
  roles(cluster);
  cluster->add_option("--k", o.k, "Number of pose classes")->capture_default_str();
  seed(cluster, o.cluster_seed, "Seeding RNG");
  cluster->add_option("--threads", o.threads, "Distance-matrix workers (0 = all cores)")->capture_default_str();

  auto* tcls = app.add_subcommand("train-classifier", "Train the pose-class classifier");
  dataset(tcls);
  vocab(tcls);
  tcls->add_option("--classifier", o.classifier, "Output checkpoint (default <workdir>/classifier.params)");
  roles(tcls);
  training(tcls);

  auto* tvae = app.add_subcommand("train-vae", "Train the conditional VAE and pick delta");
  dataset(tvae);
  models(tvae);
  roles(tvae);
  training(tvae);
  tvae->add_option("--latent", o.latent)->capture_default_str()->check(CLI::PositiveNumber);
  tvae->add_option("--kl-weight", o.kl_weight)->capture_default_str()->check(CLI::NonNegativeNumber);
  tvae->add_option("--m", o.m, "Samples per plausibility score")->capture_default_str()->check(CLI::PositiveNumber);
  tvae->add_option("--delta", o.delta, "Fixed plausibility threshold (default: F1-optimal on validation)");
  tvae->add_option("--score-seed", o.score_seed)->capture_default_str();
  negatives(tvae);

  auto* gen = app.add_subcommand("generate", "Sample poses at a point of a scene");
  dataset(gen);
  models(gen);
  gen->add_option("--scene", o.scene)->required();
  gen->add_option("--point", o.point, "X,Y in pixels")->required();
  gen->add_option("--samples", o.samples)->capture_default_str();
  seed(gen, o.score_seed, "Latent sampling seed");
  out(gen, "Write JSON here instead of stdout");

  auto* score = app.add_subcommand("score", "Plausibility distance of a pose");
  dataset(score);
  models(score);
  score->add_option("--record", o.record, "Score a dataset record at its anchor");
  score->add_option("--scene", o.scene);
  score->add_option("--point", o.point, "X,Y in pixels");
  score->add_option("--joints", o.joints, "34 comma-separated coordinates");
  seed(score, o.score_seed, "Latent sampling seed");
  out(score, "Write JSON here instead of stdout");

  auto* eval = app.add_subcommand("evaluate", "Top-k accuracy and precision/recall on the test show");
  dataset(eval);
  models(eval);
  roles(eval);
  negatives(eval);
  eval->add_option("--k-max", o.k_max)->capture_default_str()->check(CLI::PositiveNumber);
  seed(eval, o.score_seed, "Latent sampling seed");
  out(eval, "Directory for eval.json, eval.txt and pr.csv (default <workdir>)");

  auto* serve = app.add_subcommand("serve", "HTTP annotation and prediction API");
  dataset(serve);
  models(serve);
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--port", o.port)->capture_default_str();

  auto* replay = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  replay->add_option("--manifest", o.manifest)->required();

  for (CLI::Option* opt : app.get_options()) {
    if (!opt->get_lnames().empty() && opt->get_lnames().front() != "help") opt->envname(env_name(opt->get_lnames().front()));
  }
  for (CLI::App* sub : app.get_subcommands({})) {
    for (CLI::Option* opt : sub->get_options()) {
      if (!opt->get_lnames().empty() && opt->get_lnames().front() != "help") {
        opt->envname(env_name(opt->get_lnames().front()));
      }
    }
  }

  std::vector<const char*> argv{"affordance"};
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  CLI::App* sub = app.get_subcommands().front();
  Run r;
  r.command = sub->get_name();
  r.argv = normalized_args(app);
  r.argv.push_back(r.command);
  for (const auto& a : normalized_args(*sub)) r.argv.push_back(a);
  r.config = o.config();

  try {
    if (sub == replay) {
      const json m = json::parse(read_file_bytes(o.manifest), nullptr, false);
      if (m.is_discarded() || !m.contains("argv")) throw Error(ErrorKind::format, o.manifest + " is not a run manifest");
      return run(m.at("argv").get<std::vector<std::string>>());
    }
    if (sub == fixture) cmd_make_fixture(o, r);
    if (sub == mine_cmd) cmd_mine(o, r);
    if (sub == cluster) cmd_cluster(o, r);
    if (sub == tcls) cmd_train_classifier(o, r);
    if (sub == tvae) cmd_train_vae(o, r);
    if (sub == gen) cmd_generate(o, r);
    if (sub == score) cmd_score(o, r);
    if (sub == eval) cmd_evaluate(o, r);
    if (sub == serve) cmd_serve(o, r);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(std::vector<std::string>(argv + 1, argv + argc)); }
