#include "commitcl/benchmark.hpp"
#include "commitcl/corpus.hpp"
#include "commitcl/trainer.hpp"

#include "support/synthetic.hpp"

#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace commitcl;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::string quote(const std::string& arg) {
    std::string q = "'";
    for (char c : arg) {
        if (c == '\'') {
            q += "'\\''";
        } else {
            q += c;
        }
    }
    return q + "'";
}

class Workspace {
public:
    Workspace() {
        m_dir = fs::temp_directory_path() / ("commitcl_cli_" + std::to_string(::getpid()));
        fs::create_directories(m_dir);
    }
    ~Workspace() { fs::remove_all(m_dir); }

    fs::path path(const std::string& name) const { return m_dir / name; }

    fs::path write(const std::string& name, const std::string& text) const {
        std::ofstream(path(name), std::ios::binary) << text;
        return path(name);
    }

    RunResult run(const std::vector<std::string>& args) const {
        std::string cmd = quote(COMMITCL_CLI_PATH);
        for (const auto& a : args) {
            cmd += " " + quote(a);
        }
        const fs::path out = path("stdout.txt");
        const fs::path err = path("stderr.txt");
        cmd += " > " + quote(out.string()) + " 2> " + quote(err.string());
        const int status = std::system(cmd.c_str());
        RunResult r;
        r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        r.out = slurp(out);
        r.err = slurp(err);
        return r;
    }

private:
    fs::path m_dir;
};

std::string synthetic_csv(std::size_t per_class) {
    std::ostringstream os;
    write_generic(testing::make_separable_corpus(per_class, 2), os);
    return os.str();
}

std::size_t count_lines_with(const std::string& text, const std::string& prefix) {
    std::istringstream in(text);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);) {
        n += line.rfind(prefix, 0) == 0 ? 1 : 0;
    }
    return n;
}

} // namespace

TEST_CASE("ingest summarizes class counts and is byte stable") {
    Workspace ws;
    std::ostringstream csv;
    csv << "Github,Message,Diff,Label\n";
    for (int i = 0; i < 10112; ++i) {
        csv << "https://github.com/o/r/commit/" << i << ",\"msg " << i << "\",\"+x\"," << (i < 3765 ? 1 : 0) << "\n";
    }
    const auto input = ws.write("two.csv", csv.str());

    auto r = ws.run({"ingest", "--input", input.string(), "--schema", "two_way", "--out", ws.path("a.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("Positive 3765\n") != std::string::npos);
    CHECK(r.out.find("Negative 6347\n") != std::string::npos);
    CHECK(r.out.find("total 10112\n") != std::string::npos);

    r = ws.run({"ingest", "--input", input.string(), "--schema", "two_way", "--out", ws.path("b.csv").string()});
    REQUIRE(r.code == 0);
    CHECK(slurp(ws.path("a.csv")) == slurp(ws.path("b.csv")));

    // the normalized file loads back under the generic schema
    const Corpus back = load_dataset(ws.path("a.csv"), Schema::Generic);
    CHECK(back.class_counts() == std::vector<std::size_t>{3765, 6347});
}

TEST_CASE("ingest reports unknown label tokens with their row") {
    Workspace ws;
    const auto input = ws.write("bad.csv", "Github,Message,Diff,Label\nu1,m1,d1,1\nu2,m2,d2,7\n");
    const auto r = ws.run({"ingest", "--input", input.string(), "--schema", "two_way"});
    CHECK(r.code == 2);
    CHECK(r.err.find("UnknownLabelToken") != std::string::npos);
    CHECK(r.err.find("row 3") != std::string::npos);
    CHECK(r.out.empty());
}

TEST_CASE("argument and config errors exit with 2") {
    Workspace ws;
    const auto corpus = ws.write("syn.csv", synthetic_csv(20));
    const auto ckpt = ws.path("m.json").string();
    CHECK(ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--encoder", "precomputed:missing.file"}).code ==
          2);
    CHECK(ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--encoder", "bogus"}).code == 2);
    CHECK(ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--tau", "abc"}).code == 2);
    CHECK(ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--loss_mode", "hinge"}).code == 2);
    CHECK(ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--no-such-flag"}).code == 2);
    CHECK(ws.run({"train", "--corpus", corpus.string()}).code == 2);

    const auto unknown = ws.write("unknown.json", R"({"max_epochs": 3, "learnig_rate": 0.1})");
    auto r = ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--config", unknown.string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("learnig_rate") != std::string::npos);

    const auto wrong_type = ws.write("wrong.json", R"({"max_epochs": "three"})");
    CHECK(ws.run({"train", "--corpus", corpus.string(), "--out", ckpt, "--config", wrong_type.string()}).code == 2);
    CHECK_FALSE(fs::exists(ckpt));
}

TEST_CASE("training failures exit with 3") {
    Workspace ws;
    const auto corpus = ws.write("syn.csv", synthetic_csv(20));
    const auto r = ws.run({"train", "--corpus", corpus.string(), "--out", ws.path("m.json").string(),
                           "--train_fraction", "0.7", "--val_fraction", "0", "--test_fraction", "0.3"});
    CHECK(r.code == 3);
    CHECK(r.err.find("EmptyValidation") != std::string::npos);
}

TEST_CASE("train, eval, predict and bench end to end") {
    Workspace ws;
    const auto corpus = ws.write("syn.csv", synthetic_csv(50));
    const auto config = ws.write("cfg.json", R"({"max_epochs": 50, "patience": 4, "seed": 7})");
    const auto ckpt = ws.path("model.json").string();

    auto r = ws.run({"train", "--corpus", corpus.string(), "--config", config.string(), "--max_epochs", "6", "--out",
                     ckpt});
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(ckpt));
    const std::size_t epochs = count_lines_with(r.err, "epoch ");
    CHECK(epochs >= 1);
    CHECK(epochs <= 6);  // the flag wins over the config file
    const json summary = json::parse(r.out);
    CHECK(summary["epochs"] == epochs);

    // same seed, same bytes
    const auto ckpt2 = ws.path("model2.json").string();
    REQUIRE(ws.run({"train", "--corpus", corpus.string(), "--config", config.string(), "--max_epochs", "6", "--out",
                    ckpt2})
                .code == 0);
    CHECK(slurp(ckpt) == slurp(ckpt2));
    REQUIRE(ws.run({"train", "--corpus", corpus.string(), "--config", config.string(), "--max_epochs", "6", "--seed",
                    "8", "--out", ckpt2})
                .code == 0);
    CHECK(slurp(ckpt) != slurp(ckpt2));

    SUBCASE("eval on the memorized training split is perfect") {
        r = ws.run({"eval", "--checkpoint", ckpt, "--corpus", corpus.string(), "--split", "train"});
        REQUIRE(r.code == 0);
        const json report = json::parse(r.out);
        CHECK(report["accuracy"] == 1.0);
        CHECK(report["kind"] == "eval_report");
        CHECK(report["format_version"] == kReportFormatVersion);
        for (const char* key : {"per_class", "confusion", "precision", "recall", "f1", "averaging", "total"}) {
            CHECK(report.contains(key));
        }
    }

    SUBCASE("eval matches the library call on the same split") {
        const auto report_path = ws.path("report.json").string();
        const auto cm_path = ws.path("cm.csv").string();
        r = ws.run({"eval", "--checkpoint", ckpt, "--corpus", corpus.string(), "--split", "test", "--out",
                    report_path, "--confusion", cm_path, "--averaging", "weighted"});
        REQUIRE(r.code == 0);

        const Checkpoint cp = load_checkpoint(ckpt);
        const Corpus c = load_dataset(corpus, Schema::Generic);
        const auto split = split_corpus(c, cp.split.fractions, cp.split.seed);
        const Classifier classifier(cp, build_encoder_suite(cp.encoder));
        const EvalReport expected = evaluate_records(classifier, c.select(split.test), Averaging::Weighted);
        CHECK(json::parse(r.out) == to_json(expected));
        CHECK(json::parse(slurp(report_path)) == to_json(expected));
        CHECK(slurp(cm_path) == confusion_csv(expected.confusion));

        r = ws.run({"eval", "--checkpoint", ckpt, "--corpus", corpus.string(), "--format", "table"});
        REQUIRE(r.code == 0);
        CHECK(r.out.find("accuracy") != std::string::npos);
    }

    SUBCASE("predict") {
        r = ws.run({"predict", "--checkpoint", ckpt, "--message", "This sentence is Adaptive"});
        REQUIRE(r.code == 0);
        CHECK(count_lines_with(r.out, "{") == 1);
        json p = json::parse(r.out);
        CHECK(p["label"] == "Adaptive");

        r = ws.run({"predict", "--checkpoint", ckpt, "--message", ""});
        REQUIRE(r.code == 0);
        p = json::parse(r.out);
        CHECK(p["scores"].size() == 2);
        for (const auto& [label, score] : p["scores"].items()) {
            CHECK(score.get<double>() >= -1.0);
            CHECK(score.get<double>() <= 1.0);
        }

        CHECK(ws.run({"predict", "--checkpoint", ckpt, "--message", "x", "--cc", "diff"}).code == 2);
    }

    SUBCASE("bench") {
        r = ws.run({"bench", "--checkpoint", ckpt, "--lengths", "8,32", "--reps", "10"});
        REQUIRE(r.code == 0);
        const json report = json::parse(r.out);
        CHECK(report["kind"] == "bench_report");
        CHECK(report["reps"] == 10);
        CHECK(report["latency"].size() == 2);
        CHECK(ws.run({"bench", "--checkpoint", ckpt, "--reps", "3"}).code == 2);
    }

    SUBCASE("damaged checkpoints are rejected") {
        const std::string text = slurp(ckpt);
        const auto broken = ws.write("broken.json", text.substr(0, text.size() / 3));
        r = ws.run({"predict", "--checkpoint", broken.string(), "--message", "fix"});
        CHECK(r.code == 2);
        CHECK(r.err.find("CorruptCheckpoint") != std::string::npos);
    }
}

TEST_CASE("fewshot runs a grid and is reproducible") {
    Workspace ws;
    const auto corpus = ws.write("syn.csv", synthetic_csv(40));
    const std::vector<std::string> args = {"fewshot", "--corpus", corpus.string(), "--shots", "5,10",
                                           "--seeds", "1,2", "--max_epochs", "4"};
    const auto a = ws.run(args);
    REQUIRE(a.code == 0);
    const json report = json::parse(a.out);
    CHECK(report["kind"] == "fewshot_report");
    REQUIRE(report["cells"].size() == 2);
    CHECK(report["cells"][0]["shots"] == 5);
    CHECK(report["cells"][1]["runs"].size() == 2);
    CHECK(ws.run(args).out == a.out);

    const auto t = ws.run({"fewshot", "--corpus", corpus.string(), "--shots", "5", "--seeds", "1", "--max_epochs", "2",
                           "--format", "table"});
    REQUIRE(t.code == 0);
    CHECK(t.out.find("shots") != std::string::npos);
}

TEST_CASE("version lists the formats") {
    Workspace ws;
    const auto r = ws.run({"--version"});
    CHECK(r.code == 0);
    CHECK(r.out.find("checkpoint format " + std::to_string(kCheckpointFormatVersion)) != std::string::npos);
}
