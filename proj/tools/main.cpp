// fast0tag command-line interface: synth, train, predict, eval, analyze.
// Logs go to stderr; data goes to files or stdout. Exit codes: 0 success,
// 2 usage/config/data error, 3 numerical failure.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "fast0tag/analysis.hpp"
#include "fast0tag/dataset.hpp"
#include "fast0tag/embedding.hpp"
#include "fast0tag/errors.hpp"
#include "fast0tag/eval.hpp"
#include "fast0tag/linear_map.hpp"
#include "fast0tag/model_io.hpp"
#include "fast0tag/parallel.hpp"
#include "fast0tag/rank_net.hpp"
#include "fast0tag/ranksvm.hpp"
#include "fast0tag/synth.hpp"
#include "fast0tag/tagger.hpp"

namespace fs = std::filesystem;
using f0t::DataError;

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open input file '" + path + "'");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open output file '" + path + "'");
  return out;
}

f0t::EmbeddingTable load_normalized_table(const std::string& path) {
  auto in = open_input(path);
  return f0t::load_embeddings(in).normalized();
}

f0t::TaggedImageSet load_set(const std::string& features, const std::string& annotations,
                             const std::string& splits) {
  auto f = open_input(features);
  auto a = open_input(annotations);
  auto s = open_input(splits);
  return f0t::load_dataset(f, a, s);
}

f0t::VocabularyPartition load_partition(const std::string& seen_path,
                                        const std::string& unseen_path,
                                        const f0t::EmbeddingTable& table) {
  auto seen = open_input(seen_path);
  if (unseen_path.empty()) {
    std::istringstream empty;
    return f0t::make_partition(seen, empty, table);
  }
  auto unseen = open_input(unseen_path);
  return f0t::make_partition(seen, unseen, table);
}

std::map<std::string, std::set<std::string>> load_truths(const std::string& path) {
  auto in = open_input(path);
  std::map<std::string, std::set<std::string>> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string context = path + " line " + std::to_string(line_no);
    if (line.find('\r') != std::string::npos) {
      throw DataError(context + ": CR character; only LF line endings are accepted");
    }
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 == line.size()) {
      throw DataError(context + ": malformed line");
    }
    const std::string id = line.substr(0, tab);
    if (out.count(id) != 0) throw DataError(context + ": duplicate id '" + id + "'");
    auto& tags = out[id];
    std::size_t start = tab + 1;
    for (std::size_t i = start; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (i == start) throw DataError(context + ": empty tag");
        tags.insert(line.substr(start, i - start));
        start = i + 1;
      }
    }
  }
  return out;
}

// Applies an optional `key = value` config file: every key becomes a
// `--key=value` token appended to the argument list unless the user already
// passed that flag (command-line values take precedence). Unknown keys then
// fail parsing like any unrecognized flag.
std::vector<std::string> merge_config_args(const std::vector<std::string>& args) {
  std::string config_path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw DataError("--config requires a path");
      config_path = args[i + 1];
    } else if (args[i].rfind("--config=", 0) == 0) {
      config_path = args[i].substr(9);
    }
  }
  if (config_path.empty()) return args;

  const auto trim = [](const std::string& s) {
    const auto begin = s.find_first_not_of(" \t");
    if (begin == std::string::npos) return std::string();
    const auto end = s.find_last_not_of(" \t");
    return s.substr(begin, end - begin + 1);
  };

  auto in = open_input(config_path);
  std::vector<std::string> out = args;
  std::set<std::string> keys;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string context = config_path + " line " + std::to_string(line_no);
    const std::string content = trim(line);
    if (content.empty() || content[0] == '#') continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw DataError(context + ": expected key = value");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key.empty() || value.empty()) throw DataError(context + ": expected key = value");
    if (key == "config") throw DataError(context + ": config files cannot nest");
    if (!keys.insert(key).second) throw DataError(context + ": duplicate key '" + key + "'");

    bool overridden = false;
    for (const auto& arg : args) {
      if (arg == "--" + key || arg.rfind("--" + key + "=", 0) == 0) {
        overridden = true;
        break;
      }
    }
    if (!overridden) out.push_back("--" + key + "=" + value);
  }
  return out;
}

void echo_config(const CLI::App* command) {
  std::cerr << "[config] command = " << command->get_name() << "\n";
  std::istringstream lines(command->config_to_str(true, false));
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty()) std::cerr << "[config] " << line << "\n";
  }
}

std::vector<double> parse_lambda_grid(const std::string& csv) {
  std::vector<double> grid;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= csv.size(); ++i) {
    if (i == csv.size() || csv[i] == ',') {
      const std::string token = csv.substr(start, i - start);
      try {
        std::size_t used = 0;
        const double v = std::stod(token, &used);
        if (used != token.size() || v <= 0.0) throw std::invalid_argument(token);
        grid.push_back(v);
      } catch (const std::exception&) {
        throw DataError("invalid lambda grid entry '" + token + "'");
      }
      start = i + 1;
    }
  }
  return grid;
}

void write_matrix_csv(std::ostream& out, const Eigen::MatrixXd& m, const std::string& prefix) {
  std::ostringstream line;
  line << std::setprecision(9);
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    if (c != 0) out << ',';
    out << prefix << c;
  }
  out << '\n';
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.str({});
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c != 0) line << ',';
      line << m(r, c);
    }
    out << line.str() << '\n';
  }
}

// ---------------------------------------------------------------------------

struct CommonFlags {
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = all available cores
  std::string config;
};

void add_common(CLI::App* sub, CommonFlags& flags) {
  sub->add_option("--seed", flags.seed, "Seed for every random draw of this command")
      ->capture_default_str();
  sub->add_option("--threads", flags.threads,
                  "Worker threads for per-image fits (0 = all cores)")
      ->capture_default_str();
  sub->add_option("--config", flags.config,
                  "key = value file; command-line flags take precedence");
}

struct SvmFlags {
  double lambda = 1.0;
  int max_iter = 2000;
  double tol = 1e-6;
  double eta0 = 1.0;

  f0t::SvmOptions options() const { return {max_iter, tol, eta0, 10}; }
};

void add_svm(CLI::App* sub, SvmFlags& flags, bool with_lambda = true) {
  if (with_lambda) {
    sub->add_option("--lambda", flags.lambda, "Ranking-svm regularization")
        ->capture_default_str();
  }
  sub->add_option("--svm-max-iter", flags.max_iter, "Subgradient iterations cap")
      ->capture_default_str();
  sub->add_option("--svm-tol", flags.tol, "Relative objective tolerance")
      ->capture_default_str();
  sub->add_option("--svm-eta0", flags.eta0, "Initial step size")->capture_default_str();
}

// ---------------------------------------------------------------------------

struct SynthArgs {
  CommonFlags common;
  std::size_t images = 500;
  int seen_tags = 40;
  int unseen_tags = 10;
  int feature_dim = 32;
  int embed_dim = 32;
  double margin = 0.15;
  double noise_sigma = 0.0;
  std::string out_dir;
  bool binary_features = false;
  std::string seen_out;
  std::string unseen_out;
};

void run_synth(const SynthArgs& args) {
  f0t::SynthSpec spec;
  spec.num_images = args.images;
  spec.num_seen_tags = args.seen_tags;
  spec.num_unseen_tags = args.unseen_tags;
  spec.feature_dim = args.feature_dim;
  spec.embed_dim = args.embed_dim;
  spec.margin = args.margin;
  spec.noise_sigma = args.noise_sigma;
  spec.seed = args.common.seed;

  const f0t::SynthData data = f0t::generate(spec);

  fs::create_directories(args.out_dir);
  const fs::path dir(args.out_dir);
  {
    auto out = open_output((dir / "embeddings.txt").string());
    f0t::save_embeddings(data.table, out);
  }
  if (args.binary_features) {
    auto out = open_output((dir / "features.bin").string());
    f0t::save_features_binary(data.set, out);
  } else {
    auto out = open_output((dir / "features.tsv").string());
    f0t::save_features_text(data.set, out);
  }
  {
    auto out = open_output((dir / "annotations.tsv").string());
    f0t::save_annotations(data.set, out);
  }
  {
    auto out = open_output((dir / "splits.tsv").string());
    f0t::save_splits(data.set, out);
  }
  {
    f0t::LinearDirectionMap planted;
    planted.A = data.planted;
    auto out = open_output((dir / "planted_map.txt").string());
    f0t::save_linear_map(planted, out);
  }
  if (!args.seen_out.empty()) {
    auto out = open_output(args.seen_out);
    for (const auto& tag : data.partition.seen()) out << tag << '\n';
  }
  if (!args.unseen_out.empty()) {
    auto out = open_output(args.unseen_out);
    for (const auto& tag : data.partition.unseen()) out << tag << '\n';
  }

  std::cerr << "[synth] wrote " << data.set.size() << " images, "
            << data.table.size() << " tags to " << args.out_dir << "\n";
}

// ---------------------------------------------------------------------------

struct TrainArgs {
  CommonFlags common;
  SvmFlags svm;
  std::string model;  // linear | net
  std::string embeddings, features, annotations, splits, seen;
  std::string out;
  std::string log_out;
  bool binary = false;
  double ridge = 1e-6;
  f0t::TrainConfig net;
  bool no_per_image_norm = false;
};

void run_train(const TrainArgs& args) {
  const f0t::EmbeddingTable table = load_normalized_table(args.embeddings);
  const f0t::TaggedImageSet set = load_set(args.features, args.annotations, args.splits);
  const f0t::VocabularyPartition partition = load_partition(args.seen, "", table);

  if (args.model == "linear") {
    const f0t::TwoStageResult result =
        f0t::two_stage_train(set, table, partition, args.svm.lambda, args.ridge,
                             args.svm.options(), args.common.threads);
    auto out = open_output(args.out);
    f0t::save_linear_map(result.map, out, args.binary);
    std::cerr << "[train] linear model: images_used=" << result.images_used
              << " skipped_degenerate=" << result.images_skipped_degenerate
              << " diverged=" << result.images_diverged
              << " residual_rms=" << result.map.residual_rms << "\n";
    return;
  }
  if (args.model != "net") {
    throw DataError("unknown --model '" + args.model + "' (expected linear|net)");
  }

  f0t::TrainConfig config = args.net;
  config.normalize_per_image = !args.no_per_image_norm;
  config.seed = args.common.seed;
  const f0t::NetTrainResult result =
      f0t::train_mlp(set, table, partition, config, args.common.threads);

  {
    auto out = open_output(args.out);
    f0t::save_mlp({result.params, config.dropout_rate, config.seed}, out, args.binary);
  }
  const std::string log_path = args.log_out.empty() ? args.out + ".log.csv" : args.log_out;
  {
    auto out = open_output(log_path);
    f0t::write_training_log(out, result.log);
  }
  std::cerr << "[train] net model: epochs_run=" << result.log.size()
            << " best_epoch=" << result.best_epoch
            << " best_val_miap=" << result.best_val_miap
            << " per_image_norm=" << (config.normalize_per_image ? "on" : "off")
            << " log=" << log_path << "\n";
}

// ---------------------------------------------------------------------------

struct PredictArgs {
  CommonFlags common;
  std::string model_file;
  std::string embeddings, features, seen, unseen;
  std::string splits;
  std::string split = "all";  // train|val|test|all
  std::string scenario = "conventional";
  int top = 0;
  std::string out;
};

void run_predict(const PredictArgs& args) {
  const f0t::EmbeddingTable table = load_normalized_table(args.embeddings);
  const f0t::Scenario scenario = f0t::parse_scenario(args.scenario);
  const f0t::VocabularyPartition partition =
      load_partition(args.seen, args.unseen, table);

  f0t::AnyModel model = [&] {
    auto in = open_input(args.model_file);
    return f0t::load_model(in);
  }();

  // Annotations are not needed to predict; splits only when filtering.
  const f0t::TaggedImageSet set = [&] {
    auto f = open_input(args.features);
    if (args.split == "all") return f0t::load_features(f);
    if (args.splits.empty()) {
      throw DataError("--split " + args.split + " requires --splits");
    }
    std::istringstream no_annotations;
    auto s = open_input(args.splits);
    return f0t::load_dataset(f, no_annotations, s);
  }();

  std::vector<std::size_t> indices;
  if (args.split == "all") {
    for (std::size_t i = 0; i < set.size(); ++i) indices.push_back(i);
  } else {
    indices = set.indices_of_split(f0t::parse_split(args.split));
  }

  const int model_in = std::holds_alternative<f0t::LinearDirectionMap>(model)
                           ? static_cast<int>(std::get<f0t::LinearDirectionMap>(model).A.cols())
                           : std::get<f0t::MlpParams>(model).feature_dim();
  const int model_out = std::holds_alternative<f0t::LinearDirectionMap>(model)
                            ? static_cast<int>(std::get<f0t::LinearDirectionMap>(model).A.rows())
                            : std::get<f0t::MlpParams>(model).output_dim();
  if (model_in != set.feature_dim()) {
    throw DataError("model expects feature dim " + std::to_string(model_in) +
                    ", features have " + std::to_string(set.feature_dim()));
  }
  if (model_out != table.dim()) {
    throw DataError("model outputs dim " + std::to_string(model_out) +
                    ", embeddings have dim " + std::to_string(table.dim()));
  }

  std::vector<f0t::RankedTagList> rankings(indices.size());
  f0t::parallel_for(indices.size(), args.common.threads, [&](std::size_t k) {
    rankings[k] = f0t::tag_image(model, set.at(indices[k]).features, table, partition,
                                 scenario);
  });

  std::vector<std::pair<std::string, f0t::RankedTagList>> predictions;
  predictions.reserve(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    predictions.emplace_back(set.at(indices[k]).id, std::move(rankings[k]));
  }

  if (args.out.empty()) {
    f0t::write_predictions(std::cout, predictions, args.top);
  } else {
    auto out = open_output(args.out);
    f0t::write_predictions(out, predictions, args.top);
  }
  std::cerr << "[predict] scenario=" << args.scenario << " images=" << predictions.size()
            << "\n";
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  CommonFlags common;
  std::string predictions, annotations;
  std::vector<int> ks;
  std::string out;
  std::string json_out;
};

void run_eval(const EvalArgs& args) {
  auto predictions_in = open_input(args.predictions);
  const auto predictions = f0t::read_predictions(predictions_in);
  if (predictions.empty()) throw DataError("no prediction rows in " + args.predictions);
  const auto truths_by_id = load_truths(args.annotations);

  std::vector<f0t::RankedTagList> rankings;
  std::vector<std::set<std::string>> truths;
  rankings.reserve(predictions.size());
  for (const auto& [id, ranking] : predictions) {
    rankings.push_back(ranking);
    const auto it = truths_by_id.find(id);
    truths.push_back(it != truths_by_id.end() ? it->second : std::set<std::string>{});
  }

  const std::vector<int> ks = args.ks.empty() ? std::vector<int>{3, 5} : args.ks;
  const f0t::EvalReport report = f0t::evaluate(rankings, truths, ks);

  if (args.out.empty()) {
    f0t::write_report_text(std::cout, report);
  } else {
    auto out = open_output(args.out);
    f0t::write_report_text(out, report);
  }
  if (!args.json_out.empty()) {
    auto out = open_output(args.json_out);
    f0t::write_report_json(out, report);
  }
  std::cerr << "[eval] images_scored=" << report.images_scored
            << " images_skipped=" << report.images_skipped_no_positives << "\n";
}

// ---------------------------------------------------------------------------

struct RankabilityArgs {
  CommonFlags common;
  SvmFlags svm;
  std::vector<std::string> embeddings;  // path or label=path
  std::string features, annotations, splits, seen, unseen;
  std::string lambda_grid = "0.0001,0.001,0.01,0.1,1,10";
  std::string out;
};

void run_rankability(const RankabilityArgs& args) {
  std::vector<std::pair<std::string, f0t::EmbeddingTable>> tables;
  for (const auto& entry : args.embeddings) {
    const auto eq = entry.find('=');
    const std::string label =
        eq == std::string::npos ? fs::path(entry).stem().string() : entry.substr(0, eq);
    const std::string path = eq == std::string::npos ? entry : entry.substr(eq + 1);
    tables.emplace_back(label, load_normalized_table(path));
  }

  const f0t::TaggedImageSet set = load_set(args.features, args.annotations, args.splits);
  const f0t::VocabularyPartition partition =
      load_partition(args.seen, args.unseen, tables.front().second);

  const f0t::RankabilityReport report = f0t::rankability_experiment(
      set, tables, partition, parse_lambda_grid(args.lambda_grid), args.svm.options(),
      args.common.threads);

  if (args.out.empty()) {
    f0t::write_rankability_csv(std::cout, report);
  } else {
    auto out = open_output(args.out);
    f0t::write_rankability_csv(out, report);
  }
  std::cerr << "[analyze rankability] rows=" << report.rows.size() << "\n";
}

struct OffsetsArgs {
  CommonFlags common;
  std::string embeddings, features, annotations, splits, seen, unseen;
  std::string image_id;
  int pca = 0;
  std::string out;
  std::string pca_out;
  std::string components_out;
};

void run_offsets(const OffsetsArgs& args) {
  const f0t::EmbeddingTable table = load_normalized_table(args.embeddings);
  const f0t::TaggedImageSet set = load_set(args.features, args.annotations, args.splits);
  const f0t::VocabularyPartition partition =
      load_partition(args.seen, args.unseen, table);

  const auto [relevant, irrelevant] = derive_rule(set, args.image_id, partition);
  if (relevant.empty() || irrelevant.empty()) {
    throw DataError("image '" + args.image_id + "' has a degenerate rule (|Y|=" +
                    std::to_string(relevant.size()) + ", |Ybar|=" +
                    std::to_string(irrelevant.size()) + ")");
  }
  const Eigen::MatrixXd offsets =
      f0t::compute_offsets(table.rows_for(relevant), table.rows_for(irrelevant));

  if (args.out.empty()) {
    write_matrix_csv(std::cout, offsets, "v");
  } else {
    auto out = open_output(args.out);
    write_matrix_csv(out, offsets, "v");
  }

  if (args.pca > 0) {
    const f0t::PcaResult pca = f0t::pca_project(offsets, args.pca);
    if (!args.pca_out.empty()) {
      auto out = open_output(args.pca_out);
      write_matrix_csv(out, pca.projections, "pc");
    }
    if (!args.components_out.empty()) {
      auto out = open_output(args.components_out);
      write_matrix_csv(out, pca.components, "v");
    }
  }
  std::cerr << "[analyze offsets] image=" << args.image_id << " offsets=" << offsets.rows()
            << "\n";
}

struct Seen2UnseenArgs {
  CommonFlags common;
  SvmFlags svm;
  std::string predictions, embeddings, seen, unseen;
  std::string scenario = "zeroshot";
  int top_k_pos = 5;
  std::string out;
};

void run_seen2unseen(const Seen2UnseenArgs& args) {
  const f0t::EmbeddingTable table = load_normalized_table(args.embeddings);
  const f0t::VocabularyPartition partition =
      load_partition(args.seen, args.unseen, table);
  auto predictions_in = open_input(args.predictions);
  const auto base = f0t::read_predictions(predictions_in);
  if (base.empty()) throw DataError("no prediction rows in " + args.predictions);

  std::vector<std::string> candidate_names;
  if (args.scenario == "zeroshot") {
    candidate_names = partition.unseen();
  } else if (args.scenario == "mixed") {
    candidate_names = partition.seen();
    candidate_names.insert(candidate_names.end(), partition.unseen().begin(),
                           partition.unseen().end());
  } else {
    throw DataError("seen2unseen scenario must be zeroshot|mixed");
  }
  const f0t::EmbeddingTable candidates = table.subset(candidate_names);

  // Every base ranking must cover exactly the seen vocabulary.
  std::vector<f0t::RankedTagList> outputs(base.size());
  f0t::parallel_for(base.size(), args.common.threads, [&](std::size_t i) {
    const auto& ranking = base[i].second;
    if (ranking.entries.size() != partition.seen().size()) {
      throw DataError("base ranking for '" + base[i].first + "' has " +
                      std::to_string(ranking.entries.size()) + " tags, expected |S|=" +
                      std::to_string(partition.seen().size()));
    }
    for (const auto& entry : ranking.entries) {
      if (!partition.is_seen(entry.tag)) {
        throw DataError("base ranking for '" + base[i].first + "' contains non-seen tag '" +
                        entry.tag + "'");
      }
    }
    outputs[i] = f0t::seen2unseen(ranking, table, candidates, args.svm.lambda,
                                  args.top_k_pos, args.svm.options());
  });

  std::vector<std::pair<std::string, f0t::RankedTagList>> result;
  result.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    result.emplace_back(base[i].first, std::move(outputs[i]));
  }
  if (args.out.empty()) {
    f0t::write_predictions(std::cout, result);
  } else {
    auto out = open_output(args.out);
    f0t::write_predictions(out, result);
  }
  std::cerr << "[analyze seen2unseen] images=" << result.size() << "\n";
}

struct OracleArgs {
  CommonFlags common;
  SvmFlags svm;
  std::string embeddings, features, annotations, splits, seen, unseen;
  std::string out;
};

void run_oracle(const OracleArgs& args) {
  const f0t::EmbeddingTable table = load_normalized_table(args.embeddings);
  const f0t::TaggedImageSet set = load_set(args.features, args.annotations, args.splits);
  const f0t::VocabularyPartition partition =
      load_partition(args.seen, args.unseen, table);

  const f0t::OraclePredictions result = f0t::ranksvm_oracle(
      set, table, partition, args.svm.lambda, args.svm.options(), args.common.threads);

  if (args.out.empty()) {
    f0t::write_predictions(std::cout, result.predictions);
  } else {
    auto out = open_output(args.out);
    f0t::write_predictions(out, result.predictions);
  }
  std::cerr << "[analyze ranksvm-oracle] images=" << result.predictions.size()
            << " skipped=" << result.skipped << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fast0tag: zero-shot image tagging via principal directions"};
  app.require_subcommand(1);

  SynthArgs synth_args;
  TrainArgs train_args;
  PredictArgs predict_args;
  EvalArgs eval_args;
  RankabilityArgs rankability_args;
  OffsetsArgs offsets_args;
  Seen2UnseenArgs s2u_args;
  OracleArgs oracle_args;

  // synth ------------------------------------------------------------------
  CLI::App* synth = app.add_subcommand("synth", "Generate a planted synthetic dataset");
  add_common(synth, synth_args.common);
  synth->add_option("--images", synth_args.images)->capture_default_str();
  synth->add_option("--seen-tags", synth_args.seen_tags)->capture_default_str();
  synth->add_option("--unseen-tags", synth_args.unseen_tags)->capture_default_str();
  synth->add_option("--feature-dim", synth_args.feature_dim)->capture_default_str();
  synth->add_option("--embed-dim", synth_args.embed_dim)->capture_default_str();
  synth->add_option("--margin", synth_args.margin)->capture_default_str();
  synth->add_option("--noise-sigma", synth_args.noise_sigma)->capture_default_str();
  synth->add_option("--out-dir", synth_args.out_dir, "Directory for the dataset files")
      ->required();
  synth->add_flag("--binary-features", synth_args.binary_features,
                  "Write features.bin instead of features.tsv");
  synth->add_option("--seen-out", synth_args.seen_out,
                    "Also write the seen vocabulary, one tag per line");
  synth->add_option("--unseen-out", synth_args.unseen_out,
                    "Also write the unseen vocabulary, one tag per line");

  // train ------------------------------------------------------------------
  CLI::App* train = app.add_subcommand("train", "Train a linear or net direction model");
  add_common(train, train_args.common);
  train->add_option("--model", train_args.model, "linear | net")->required();
  train->add_option("--embeddings", train_args.embeddings)->required()->check(CLI::ExistingFile);
  train->add_option("--features", train_args.features)->required()->check(CLI::ExistingFile);
  train->add_option("--annotations", train_args.annotations)->required()->check(CLI::ExistingFile);
  train->add_option("--splits", train_args.splits)->required()->check(CLI::ExistingFile);
  train->add_option("--seen", train_args.seen, "Seen vocabulary file")->required()->check(CLI::ExistingFile);
  train->add_option("--out", train_args.out, "Model output path")->required();
  train->add_option("--log-out", train_args.log_out,
                    "Training log CSV (net; default <out>.log.csv)");
  train->add_flag("--binary", train_args.binary, "Write the binary model format");
  add_svm(train, train_args.svm);
  train->add_option("--ridge", train_args.ridge, "Ridge for the stage-2 regression")
      ->capture_default_str();
  train->add_option("--batch-size", train_args.net.batch_size)->capture_default_str();
  train->add_option("--lr", train_args.net.learning_rate)->capture_default_str();
  train->add_option("--max-epochs", train_args.net.max_epochs)->capture_default_str();
  train->add_option("--patience", train_args.net.patience)->capture_default_str();
  train->add_option("--dropout", train_args.net.dropout_rate)->capture_default_str();
  train->add_option("--hidden1", train_args.net.hidden1, "0 = max(feature dim, word dim)")
      ->capture_default_str();
  train->add_option("--hidden2", train_args.net.hidden2, "0 = max(feature dim, word dim)")
      ->capture_default_str();
  train->add_flag("--no-per-image-norm", train_args.no_per_image_norm,
                  "Disable the per-image pair-count weight");

  // predict ----------------------------------------------------------------
  CLI::App* predict = app.add_subcommand("predict", "Rank tags for images with a model");
  add_common(predict, predict_args.common);
  predict->add_option("--model-file", predict_args.model_file)->required()->check(CLI::ExistingFile);
  predict->add_option("--embeddings", predict_args.embeddings)->required()->check(CLI::ExistingFile);
  predict->add_option("--features", predict_args.features)->required()->check(CLI::ExistingFile);
  predict->add_option("--seen", predict_args.seen)->required()->check(CLI::ExistingFile);
  predict->add_option("--unseen", predict_args.unseen, "Required for zeroshot|mixed")
      ->check(CLI::ExistingFile);
  predict->add_option("--splits", predict_args.splits)->check(CLI::ExistingFile);
  predict->add_option("--split", predict_args.split, "train|val|test|all")
      ->capture_default_str();
  predict->add_option("--scenario", predict_args.scenario, "conventional|zeroshot|mixed")
      ->capture_default_str();
  predict->add_option("--top", predict_args.top, "Truncate each ranking (0 = full)")
      ->capture_default_str();
  predict->add_option("--out", predict_args.out, "Predictions TSV (default stdout)");

  // eval -------------------------------------------------------------------
  CLI::App* eval = app.add_subcommand("eval", "Score predictions against annotations");
  add_common(eval, eval_args.common);
  eval->add_option("--predictions", eval_args.predictions)->required()->check(CLI::ExistingFile);
  eval->add_option("--annotations", eval_args.annotations)->required()->check(CLI::ExistingFile);
  eval->add_option("--k", eval_args.ks, "Top-K cutoffs (repeatable; default 3 and 5)");
  eval->add_option("--out", eval_args.out, "Report path (default stdout)");
  eval->add_option("--json-out", eval_args.json_out, "Also write the report as JSON");

  // analyze ----------------------------------------------------------------
  CLI::App* analyze = app.add_subcommand("analyze", "Hypothesis tests and baselines");
  analyze->require_subcommand(1);

  CLI::App* rankability =
      analyze->add_subcommand("rankability", "Per-rule svm rank-ability experiment");
  add_common(rankability, rankability_args.common);
  add_svm(rankability, rankability_args.svm, /*with_lambda=*/false);
  rankability->add_option("--embeddings", rankability_args.embeddings,
                          "Embedding file(s), optionally label=path (repeatable)")
      ->required();
  rankability->add_option("--features", rankability_args.features)->required()->check(CLI::ExistingFile);
  rankability->add_option("--annotations", rankability_args.annotations)->required()->check(CLI::ExistingFile);
  rankability->add_option("--splits", rankability_args.splits)->required()->check(CLI::ExistingFile);
  rankability->add_option("--seen", rankability_args.seen)->required()->check(CLI::ExistingFile);
  rankability->add_option("--unseen", rankability_args.unseen)->check(CLI::ExistingFile);
  rankability->add_option("--lambda-grid", rankability_args.lambda_grid,
                          "Comma-separated lambda values")
      ->capture_default_str();
  rankability->add_option("--out", rankability_args.out, "CSV path (default stdout)");

  CLI::App* offsets = analyze->add_subcommand("offsets", "Offsets p - n of one image's rule");
  add_common(offsets, offsets_args.common);
  offsets->add_option("--embeddings", offsets_args.embeddings)->required()->check(CLI::ExistingFile);
  offsets->add_option("--features", offsets_args.features)->required()->check(CLI::ExistingFile);
  offsets->add_option("--annotations", offsets_args.annotations)->required()->check(CLI::ExistingFile);
  offsets->add_option("--splits", offsets_args.splits)->required()->check(CLI::ExistingFile);
  offsets->add_option("--seen", offsets_args.seen)->required()->check(CLI::ExistingFile);
  offsets->add_option("--unseen", offsets_args.unseen)->check(CLI::ExistingFile);
  offsets->add_option("--image-id", offsets_args.image_id)->required();
  offsets->add_option("--pca", offsets_args.pca, "Also project onto K components")
      ->capture_default_str();
  offsets->add_option("--out", offsets_args.out, "Offsets CSV (default stdout)");
  offsets->add_option("--pca-out", offsets_args.pca_out, "Projections CSV");
  offsets->add_option("--components-out", offsets_args.components_out, "Components CSV");

  CLI::App* s2u = analyze->add_subcommand(
      "seen2unseen", "Fit directions to seen-tag rankings and score new tags");
  add_common(s2u, s2u_args.common);
  add_svm(s2u, s2u_args.svm);
  s2u->add_option("--predictions", s2u_args.predictions, "Base rankings over the seen set")
      ->required()
      ->check(CLI::ExistingFile);
  s2u->add_option("--embeddings", s2u_args.embeddings)->required()->check(CLI::ExistingFile);
  s2u->add_option("--seen", s2u_args.seen)->required()->check(CLI::ExistingFile);
  s2u->add_option("--unseen", s2u_args.unseen)->required()->check(CLI::ExistingFile);
  s2u->add_option("--scenario", s2u_args.scenario, "zeroshot|mixed")->capture_default_str();
  s2u->add_option("--top-k-pos", s2u_args.top_k_pos, "Positives taken from the top of each ranking")
      ->capture_default_str();
  s2u->add_option("--out", s2u_args.out, "Predictions TSV (default stdout)");

  CLI::App* oracle = analyze->add_subcommand(
      "ranksvm-oracle", "Per-image svm on ground-truth seen rules, scored on unseen tags");
  add_common(oracle, oracle_args.common);
  add_svm(oracle, oracle_args.svm);
  oracle->add_option("--embeddings", oracle_args.embeddings)->required()->check(CLI::ExistingFile);
  oracle->add_option("--features", oracle_args.features)->required()->check(CLI::ExistingFile);
  oracle->add_option("--annotations", oracle_args.annotations)->required()->check(CLI::ExistingFile);
  oracle->add_option("--splits", oracle_args.splits)->required()->check(CLI::ExistingFile);
  oracle->add_option("--seen", oracle_args.seen)->required()->check(CLI::ExistingFile);
  oracle->add_option("--unseen", oracle_args.unseen)->required()->check(CLI::ExistingFile);
  oracle->add_option("--out", oracle_args.out, "Predictions TSV (default stdout)");

  std::vector<std::string> merged;
  try {
    merged = merge_config_args(std::vector<std::string>(argv + 1, argv + argc));
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::vector<const char*> parse_argv;
  parse_argv.push_back(argv[0]);
  for (const auto& arg : merged) parse_argv.push_back(arg.c_str());

  try {
    app.parse(static_cast<int>(parse_argv.size()),
              const_cast<char**>(parse_argv.data()));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (synth->parsed()) {
      echo_config(synth);
      run_synth(synth_args);
    } else if (train->parsed()) {
      echo_config(train);
      run_train(train_args);
    } else if (predict->parsed()) {
      echo_config(predict);
      run_predict(predict_args);
    } else if (eval->parsed()) {
      echo_config(eval);
      run_eval(eval_args);
    } else if (analyze->parsed()) {
      if (rankability->parsed()) {
        echo_config(rankability);
        run_rankability(rankability_args);
      } else if (offsets->parsed()) {
        echo_config(offsets);
        run_offsets(offsets_args);
      } else if (s2u->parsed()) {
        echo_config(s2u);
        run_seen2unseen(s2u_args);
      } else if (oracle->parsed()) {
        echo_config(oracle);
        run_oracle(oracle_args);
      }
    }
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const f0t::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
