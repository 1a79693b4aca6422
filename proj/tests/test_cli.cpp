#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;  // stdout + stderr
};

std::string cli_binary() {
    const char* env = std::getenv("MTAB_CLI");
    REQUIRE(env != nullptr);
    return env;
}

std::string fixture_snapshot() {
    const char* env = std::getenv("MTAB_FIXTURES");
    REQUIRE(env != nullptr);
    return (fs::path(env) / "snapshot").string();
}

RunResult run(const std::string& args) {
    std::string cmd = "\"" + cli_binary() + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.output.append(buf.data(), n);
    int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path fresh_workspace(const std::string& name) {
    fs::path ws = fs::temp_directory_path() / ("mtab_cli_" + name);
    fs::remove_all(ws);
    return ws;
}

void run_pipeline(const fs::path& ws) {
    std::string base = "--workspace \"" + ws.string() + "\" ";
    CHECK(run("ingest " + base + "--snapshot \"" + fixture_snapshot() + "\"").exit_code == 0);
    CHECK(run("extract " + base).exit_code == 0);
    CHECK(run("clean " + base).exit_code == 0);
    CHECK(run("dedup " + base).exit_code == 0);
    CHECK(run("augment " + base + "--seed 1").exit_code == 0);
    CHECK(run("relate " + base + "--relation overlap").exit_code == 0);
    CHECK(run("index " + base).exit_code == 0);
}

}  // namespace

TEST_CASE("full pipeline, reruns, search, eval and stats") {
    fs::path ws = fresh_workspace("main");
    run_pipeline(ws);

    // stage outputs exist
    for (const char* f : {"corpus.jsonl", "frequencies.tsv", "augmented.jsonl", "edges.tsv",
                          "term_index.bin", "table_vectors.txt", "metadata_vectors.txt"})
        CHECK(fs::exists(ws / f));

    // a completed stage is a no-op on rerun
    std::string base = "--workspace \"" + ws.string() + "\" ";
    auto noop = run("dedup " + base);
    CHECK(noop.exit_code == 0);
    CHECK(noop.output.find("up to date") != std::string::npos);

    // the corpus holds the 24 cleaned fixture tables
    std::size_t n_records = 0;
    std::string first_id;
    {
        std::ifstream in(ws / "corpus.jsonl");
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            if (first_id.empty()) first_id = j.at("table_id").get<std::string>();
            ++n_records;
        }
    }
    CHECK(n_records == 24);
    REQUIRE(!first_id.empty());

    // edges.tsv carries the table count and filter description
    std::string edges = slurp(ws / "edges.tsv");
    CHECK(edges.find("# n_tables\t24\tfilter\toverlap") != std::string::npos);
    CHECK(edges.find("\tmodel\n") != std::string::npos);
    CHECK(edges.find("\tall\n") != std::string::npos);

    // search prints rank, id and score per line
    auto search = run("search " + base + "--query " + first_id + " --method keyword --k 3");
    CHECK(search.exit_code == 0);
    {
        std::istringstream lines(search.output);
        std::string line;
        int rank = 0;
        while (std::getline(lines, line)) {
            if (line.empty() || line.find('\t') == std::string::npos) continue;
            ++rank;
            std::istringstream cols(line);
            std::string rank_col, id_col, score_col;
            std::getline(cols, rank_col, '\t');
            std::getline(cols, id_col, '\t');
            std::getline(cols, score_col, '\t');
            CHECK(rank_col == std::to_string(rank));
            CHECK(id_col.size() >= 16);
            CHECK(std::stod(score_col) >= 0.0);
        }
        CHECK(rank >= 1);
        CHECK(rank <= 3);
    }

    // eval writes both report files
    auto eval = run("eval " + base + "--method dense --method sparse --graph model --k 1");
    CHECK(eval.exit_code == 0);
    CHECK(fs::exists(ws / "report.jsonl"));
    CHECK(fs::exists(ws / "report.txt"));
    {
        std::ifstream in(ws / "report.jsonl");
        std::string line;
        REQUIRE(std::getline(in, line));
        json header = json::parse(line);
        CHECK(header.at("record") == "header");
        std::size_t cells = 0;
        while (std::getline(in, line))
            if (!line.empty()) ++cells;
        CHECK(cells == 2);  // two methods, one graph, no subsets
    }

    auto stats = run("stats " + base);
    CHECK(stats.exit_code == 0);
    CHECK(fs::exists(ws / "stats.txt"));
    CHECK(fs::exists(ws / "frequency_distribution.tsv"));
    CHECK(fs::exists(ws / "degree_distribution.tsv"));
    std::string st = slurp(ws / "stats.txt");
    CHECK(st.find("density") != std::string::npos);

    fs::remove_all(ws);
}

TEST_CASE("two independent runs are byte-identical") {
    fs::path w1 = fresh_workspace("det1");
    fs::path w2 = fresh_workspace("det2");
    run_pipeline(w1);
    run_pipeline(w2);
    std::string b1 = "--workspace \"" + w1.string() + "\" ";
    std::string b2 = "--workspace \"" + w2.string() + "\" ";
    CHECK(run("eval " + b1 + "--method dense --graph model --k 1").exit_code == 0);
    CHECK(run("eval " + b2 + "--method dense --graph model --k 1").exit_code == 0);

    for (const char* f : {"corpus.jsonl", "frequencies.tsv", "augmented.jsonl", "edges.tsv",
                          "term_index.bin", "table_vectors.txt", "metadata_vectors.txt",
                          "report.jsonl", "report.txt"})
        CHECK(slurp(w1 / f) == slurp(w2 / f));

    fs::remove_all(w1);
    fs::remove_all(w2);
}

TEST_CASE("exit codes: usage errors and missing stages") {
    fs::path ws = fresh_workspace("codes");

    // unknown subcommand / missing required subcommand -> usage error
    CHECK(run("frobnicate --workspace \"" + ws.string() + "\"").exit_code == 1);
    CHECK(run("--workspace \"" + ws.string() + "\"").exit_code == 1);

    // eval before the pipeline ran -> missing dependency stage
    auto premature = run("eval --workspace \"" + ws.string() + "\"");
    CHECK(premature.exit_code == 3);
    CHECK(premature.output.find("missing dependency stage") != std::string::npos);

    // extract without ingest names the stage to run first
    auto extract = run("extract --workspace \"" + ws.string() + "\"");
    CHECK(extract.exit_code == 3);
    CHECK(extract.output.find("ingest") != std::string::npos);

    // ingest with a bad snapshot path is a data error
    auto bad = run("ingest --workspace \"" + ws.string() + "\" --snapshot /nonexistent/nope");
    CHECK(bad.exit_code == 2);

    fs::remove_all(ws);
}
