// End-to-end tests of the fast0tag binary. The binary path comes from the
// FAST0TAG_BIN environment variable (set by ctest).

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
  const char* env = std::getenv("FAST0TAG_BIN");
  REQUIRE_MESSAGE(env != nullptr, "FAST0TAG_BIN must point at the fast0tag binary");
  return env;
}

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

RunResult run(const std::string& args) {
  static int counter = 0;
  const fs::path base = fs::temp_directory_path() / "fast0tag_cli_io";
  fs::create_directories(base);
  const fs::path out_file = base / ("out" + std::to_string(counter));
  const fs::path err_file = base / ("err" + std::to_string(counter));
  ++counter;

  const std::string cmd =
      cli_path() + " " + args + " >" + out_file.string() + " 2>" + err_file.string();
  const int status = std::system(cmd.c_str());

  RunResult result;
  result.exit_code = status == -1 ? -1 : WEXITSTATUS(status);
  std::ostringstream out, err;
  out << std::ifstream(out_file).rdbuf();
  err << std::ifstream(err_file).rdbuf();
  result.out = out.str();
  result.err = err.str();
  return result;
}

std::string slurp(const fs::path& path) {
  std::ostringstream out;
  out << std::ifstream(path, std::ios::binary).rdbuf();
  return out.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "fast0tag_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// A small synthetic dataset most cases share.
const fs::path& dataset() {
  static const fs::path dir = [] {
    const fs::path d = fresh_dir("shared_data");
    const RunResult r =
        run("synth --out-dir " + d.string() +
            " --images 120 --seen-tags 12 --unseen-tags 6 --feature-dim 8 --embed-dim 8"
            " --margin 0.2 --seed 13 --seen-out " + (d / "seen.txt").string() +
            " --unseen-out " + (d / "unseen.txt").string());
    REQUIRE(r.exit_code == 0);
    return d;
  }();
  return dir;
}

std::string data_args() {
  const std::string d = dataset().string();
  return " --embeddings " + d + "/embeddings.txt --features " + d + "/features.tsv" +
         " --annotations " + d + "/annotations.tsv --splits " + d + "/splits.tsv" +
         " --seen " + d + "/seen.txt";
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("synth writes the five dataset files by default") {
  const fs::path dir = fresh_dir("synth_five");
  const RunResult r = run("synth --out-dir " + dir.string() +
                          " --images 30 --seen-tags 6 --unseen-tags 3"
                          " --feature-dim 5 --embed-dim 5 --margin 0.2 --seed 3");
  CHECK(r.exit_code == 0);
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    ++files;
    (void)entry;
  }
  CHECK(files == 5);
  for (const char* name : {"embeddings.txt", "features.tsv", "annotations.tsv",
                           "splits.tsv", "planted_map.txt"}) {
    CHECK(fs::exists(dir / name));
  }
}

TEST_CASE("synth with a repeated seed is byte-identical") {
  const fs::path a = fresh_dir("synth_a");
  const fs::path b = fresh_dir("synth_b");
  const std::string flags =
      " --images 25 --seen-tags 5 --unseen-tags 3 --feature-dim 4 --embed-dim 4"
      " --margin 0.2 --seed 77";
  CHECK(run("synth --out-dir " + a.string() + flags).exit_code == 0);
  CHECK(run("synth --out-dir " + b.string() + flags).exit_code == 0);
  for (const char* name : {"embeddings.txt", "features.tsv", "annotations.tsv",
                           "splits.tsv", "planted_map.txt"}) {
    CHECK(slurp(a / name) == slurp(b / name));
  }
}

TEST_CASE("synth with an infeasible margin exits 2 with a message") {
  const fs::path dir = fresh_dir("synth_bad");
  const RunResult r = run("synth --out-dir " + dir.string() +
                          " --images 10 --seen-tags 5 --unseen-tags 3"
                          " --feature-dim 4 --embed-dim 4 --margin 5.0");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("margin") != std::string::npos);
}

TEST_CASE("every command echoes its resolved config to stderr") {
  const fs::path dir = fresh_dir("echo");
  const RunResult r = run("synth --out-dir " + dir.string() +
                          " --images 25 --seen-tags 5 --unseen-tags 3"
                          " --feature-dim 4 --embed-dim 4 --seed 123");
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("[config] command = synth") != std::string::npos);
  CHECK(r.err.find("seed=123") != std::string::npos);
}

TEST_CASE("train linear writes a model and logs residual_rms") {
  const fs::path dir = fresh_dir("train_linear");
  const RunResult r = run("train --model linear" + data_args() + " --out " +
                          (dir / "linear.model").string());
  CHECK(r.exit_code == 0);
  CHECK(fs::exists(dir / "linear.model"));
  CHECK(r.err.find("residual_rms=") != std::string::npos);
  CHECK(slurp(dir / "linear.model").rfind("fast0tag-linear", 0) == 0);
}

TEST_CASE("train net with max-epochs 0 writes the initial parameters") {
  const fs::path dir = fresh_dir("train_net0");
  const RunResult r = run("train --model net" + data_args() + " --out " +
                          (dir / "net.model").string() + " --max-epochs 0 --seed 4");
  CHECK(r.exit_code == 0);
  CHECK(slurp(dir / "net.model").rfind("fast0tag-net", 0) == 0);
  // Empty training log: header only.
  CHECK(slurp(dir / "net.model.log.csv") == "epoch,train_loss,val_miap,best_so_far\n");
}

TEST_CASE("train with a missing features file exits 2 and names the path") {
  const std::string d = dataset().string();
  const RunResult r = run("train --model linear --embeddings " + d +
                          "/embeddings.txt --features ghost.tsv --annotations " + d +
                          "/annotations.tsv --splits " + d + "/splits.tsv --seen " + d +
                          "/seen.txt --out m");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("ghost.tsv") != std::string::npos);
}

TEST_CASE("predict honours scenario vocabularies and --top") {
  const fs::path dir = fresh_dir("predict");
  const std::string d = dataset().string();
  REQUIRE(run("train --model linear" + data_args() + " --out " +
              (dir / "m.model").string())
              .exit_code == 0);

  const RunResult zs = run("predict --model-file " + (dir / "m.model").string() +
                           " --embeddings " + d + "/embeddings.txt --features " + d +
                           "/features.tsv --splits " + d + "/splits.tsv --split test" +
                           " --seen " + d + "/seen.txt --unseen " + d + "/unseen.txt" +
                           " --scenario zeroshot --out " + (dir / "zs.tsv").string());
  CHECK(zs.exit_code == 0);
  {
    std::ifstream in(dir / "zs.tsv");
    std::string line;
    while (std::getline(in, line)) {
      const std::string tags = line.substr(line.find('\t') + 1);
      CHECK(std::count(tags.begin(), tags.end(), ',') == 5);  // |U| = 6 tags
    }
  }

  const RunResult top = run("predict --model-file " + (dir / "m.model").string() +
                            " --embeddings " + d + "/embeddings.txt --features " + d +
                            "/features.tsv --seen " + d + "/seen.txt --unseen " + d +
                            "/unseen.txt --scenario mixed --top 5 --out " +
                            (dir / "top.tsv").string());
  CHECK(top.exit_code == 0);
  {
    std::ifstream in(dir / "top.tsv");
    std::string line;
    while (std::getline(in, line)) {
      const std::string tags = line.substr(line.find('\t') + 1);
      CHECK(std::count(tags.begin(), tags.end(), ',') == 4);  // truncated to 5 entries
    }
  }
}

TEST_CASE("predict rejects a model/embedding dimension mismatch") {
  const fs::path dir = fresh_dir("predict_mismatch");
  const std::string d = dataset().string();
  // A linear model with the wrong output dimension.
  std::ofstream model(dir / "bad.model");
  model << "fast0tag-linear 3 8 0\n";
  for (int r = 0; r < 3; ++r) model << "0 0 0 0 0 0 0 1\n";
  model.close();

  const RunResult r = run("predict --model-file " + (dir / "bad.model").string() +
                          " --embeddings " + d + "/embeddings.txt --features " + d +
                          "/features.tsv --seen " + d + "/seen.txt"
                          " --scenario conventional");
  CHECK(r.exit_code == 2);
  CHECK(r.err.find("dim") != std::string::npos);
}

TEST_CASE("eval scores perfect predictions at miap 1 and is byte-deterministic") {
  const fs::path dir = fresh_dir("eval");
  // Hand-made two-image fixture: predictions put the relevant tags first.
  std::ofstream pred(dir / "pred.tsv");
  pred << "i1\ta:3,b:2,c:1\n";
  pred << "i2\tb:5,c:4,a:3\n";
  pred.close();
  std::ofstream truth(dir / "truth.tsv");
  truth << "i1\ta\n";
  truth << "i2\tb,c\n";
  truth.close();

  const std::string args = "eval --predictions " + (dir / "pred.tsv").string() +
                           " --annotations " + (dir / "truth.tsv").string() + " --k 3";
  const RunResult r1 = run(args + " --out " + (dir / "r1.txt").string());
  CHECK(r1.exit_code == 0);
  CHECK(slurp(dir / "r1.txt").find("miap 1.000000") != std::string::npos);

  const RunResult r2 = run(args + " --out " + (dir / "r2.txt").string());
  CHECK(r2.exit_code == 0);
  CHECK(slurp(dir / "r1.txt") == slurp(dir / "r2.txt"));

  const RunResult too_deep = run(args + " --k 9");
  CHECK(too_deep.exit_code == 2);
}

TEST_CASE("analyze rankability reports near-perfect seen MiAP on noiseless data") {
  const fs::path dir = fresh_dir("rankability");
  const std::string d = dataset().string();
  const RunResult r = run("analyze rankability --embeddings synth=" + d +
                          "/embeddings.txt --features " + d + "/features.tsv" +
                          " --annotations " + d + "/annotations.tsv --splits " + d +
                          "/splits.tsv --seen " + d + "/seen.txt --unseen " + d +
                          "/unseen.txt --lambda-grid 0.001 --out " +
                          (dir / "rank.csv").string());
  CHECK(r.exit_code == 0);
  const std::string csv = slurp(dir / "rank.csv");
  CHECK(csv.rfind("embedding,lambda,miap_seen,miap_unseen,rules\n", 0) == 0);
  // miap_seen is the third field of the data row.
  std::istringstream rows(csv);
  std::string header, row;
  std::getline(rows, header);
  std::getline(rows, row);
  std::istringstream fields(row);
  std::string embedding, lambda, miap_seen;
  std::getline(fields, embedding, ',');
  std::getline(fields, lambda, ',');
  std::getline(fields, miap_seen, ',');
  CHECK(std::stod(miap_seen) >= 0.99);
}

TEST_CASE("analyze offsets emits |Y|x|Ybar| rows for one image") {
  const fs::path dir = fresh_dir("offsets");
  const std::string d = dataset().string();

  // Find a test image and its rule size from the annotations.
  std::string image_id;
  std::size_t y_size = 0;
  {
    std::ifstream annotations(dataset() / "annotations.tsv");
    std::string line;
    std::getline(annotations, line);
    image_id = line.substr(0, line.find('\t'));
    const std::string tags = line.substr(line.find('\t') + 1);
    std::size_t seen_count = 0;
    std::istringstream tag_stream(tags);
    std::string tag;
    while (std::getline(tag_stream, tag, ',')) {
      if (tag[0] == 's') ++seen_count;
    }
    y_size = seen_count;
  }
  if (y_size == 0 || y_size >= 12) return;  // need a non-degenerate rule

  const RunResult r = run("analyze offsets --embeddings " + d + "/embeddings.txt" +
                          " --features " + d + "/features.tsv --annotations " + d +
                          "/annotations.tsv --splits " + d + "/splits.tsv --seen " + d +
                          "/seen.txt --image-id " + image_id + " --out " +
                          (dir / "off.csv").string());
  CHECK(r.exit_code == 0);
  std::size_t rows = 0;
  std::ifstream in(dir / "off.csv");
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) ++rows;
  CHECK(rows == y_size * (12 - y_size));
}

TEST_CASE("unknown analyze subcommand exits 2 with usage text") {
  const RunResult r = run("analyze frobnicate");
  CHECK(r.exit_code == 2);
  CHECK(!r.err.empty());
}

TEST_CASE("config file values apply and flags override them") {
  const fs::path dir = fresh_dir("config");
  std::ofstream conf(dir / "synth.conf");
  conf << "images = 30\n";
  conf << "margin = 0.25\n";
  conf.close();

  const RunResult r = run("synth --config " + (dir / "synth.conf").string() +
                          " --out-dir " + (dir / "out").string() +
                          " --images 20 --seen-tags 5 --unseen-tags 3"
                          " --feature-dim 4 --embed-dim 4");
  CHECK(r.exit_code == 0);
  CHECK(r.err.find("images=20") != std::string::npos);   // flag wins
  CHECK(r.err.find("margin=0.25") != std::string::npos); // file fills the gap

  std::ofstream bad(dir / "bad.conf");
  bad << "unknown_knob = 1\n";
  bad.close();
  const RunResult rejected = run("synth --config " + (dir / "bad.conf").string() +
                                 " --out-dir " + (dir / "out2").string());
  CHECK(rejected.exit_code == 2);
  CHECK(rejected.err.find("unknown_knob") != std::string::npos);
}

TEST_SUITE_END();
