#include <gtest/gtest.h>

#include <netinet/in.h>
#include <signal.h>
#include <spawn.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "archgraph/graph_store.hpp"
#include "test_support.hpp"

using namespace archgraph;
namespace fs = std::filesystem;
namespace t = archgraph::testing;

extern char** environ;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

Run cli(const std::string& args) {
  t::TempDir scratch;
  const fs::path err = scratch / "stderr";
  const std::string cmd = std::string(ARCHGRAPH_CLI) + " " + args + " 2>" + quote(err);
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = t::read_file(err);
  return r;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

int free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  close(fd);
  return ntohs(addr.sin_port);
}

// Fixture corpus indexed, filtered, extracted and loaded through the binary.
class CliFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    t::write_corpus(dir / "warcs", t::fixture_captures());
    auto r = cli("index " + quote(dir / "warcs/fixture-a.warc.gz") + " " + quote(dir / "warcs/fixture-b.warc") +
                 " --out " + quote(dir / "a.cdx"));
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli("filter --cdx " + quote(dir / "a.cdx") + " --out-dir " + quote(dir.path()));
    ASSERT_EQ(r.code, 0) << r.err;
    filter_out = r.out;
    r = cli("extract --list " + quote(dir / "extraction_list.tsv") + " --corpus-root " + quote(dir / "warcs") +
            " --workers 2 --out " + quote(dir / "links.tsv"));
    ASSERT_EQ(r.code, 0) << r.err;
    r = cli("load --store " + quote(dir / "store") + " --links " + quote(dir / "links.tsv") + " --observations " +
            quote(dir / "observations.tsv"));
    ASSERT_EQ(r.code, 0) << r.err;
    load_out = r.out;
  }

  std::string store() const { return " --store " + quote(dir / "store"); }

  t::TempDir dir;
  std::string filter_out;
  std::string load_out;
};

}  // namespace

TEST(Cli, HelpAndUsageErrors) {
  EXPECT_EQ(cli("--help").code, 0);
  EXPECT_EQ(cli("").code, 1);
  EXPECT_EQ(cli("frobnicate").code, 1);
  EXPECT_EQ(cli("rank --damping").code, 1);
  EXPECT_EQ(cli("compare --k 0").code, 1);
  EXPECT_EQ(cli("extract --list x --source ftp").code, 1);
}

TEST(Cli, MissingInputsAreValidationErrors) {
  t::TempDir dir;
  EXPECT_EQ(cli("export --store " + quote(dir / "none")).code, 1);
  EXPECT_EQ(cli("coverage --store " + quote(dir / "none")).code, 1);
  EXPECT_EQ(cli("extract --list " + quote(dir / "none.tsv") + " --corpus-root " + quote(dir.path())).code, 1);
  EXPECT_EQ(cli("extract --list " + quote(dir / "none.tsv") + " --corpus-root " + quote(dir / "nope")).code, 1);
  EXPECT_EQ(cli("rank --window 2010-13 --store " + quote(dir.path())).code, 1);
  EXPECT_EQ(cli("run-all --config " + quote(dir / "missing.conf")).code, 1);
  t::write_file(dir / "bad.conf", "colour = blue\n");
  EXPECT_EQ(cli("run-all --config " + quote(dir / "bad.conf")).code, 1);
}

TEST(Cli, FilterMatchesGoldenExtractionList) {
  t::TempDir dir;
  const auto r = cli("filter --cdx " + quote(t::data_dir() / "synthetic_1000.cdx") + " --out-dir " + quote(dir.path()));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(t::read_file(dir / "extraction_list.tsv"), t::read_file(t::data_dir() / "synthetic_1000.expected.tsv"));
  EXPECT_EQ(t::read_file(dir / "observations.tsv"), t::read_file(t::data_dir() / "synthetic_1000.observations.tsv"));
  EXPECT_NE(r.out.find("input_count=1000"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("skipped_lines=0"), std::string::npos);
}

TEST(Cli, EstimatePrintsCostModel) {
  const auto r = cli("estimate --n 1e9 --m 10 --size 5000");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("filtering_time_sec=8800\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("storage_size=510\n"), std::string::npos) << r.out;
  EXPECT_EQ(cli("estimate --n 1e9 --m 0").code, 1);
}

TEST_F(CliFixture, ExportMatchesFixtureGraph) {
  EXPECT_NE(load_out.find("inlinks_total="), std::string::npos);
  const auto r = cli("export" + store());
  ASSERT_EQ(r.code, 0) << r.err;
  std::set<t::QuadTuple> got;
  for (const auto& line : lines(r.out)) {
    std::vector<std::string> f;
    std::size_t start = 0;
    for (std::size_t tab; (tab = line.find('\t', start)) != std::string::npos; start = tab + 1) {
      f.push_back(line.substr(start, tab - start));
    }
    f.push_back(line.substr(start));
    ASSERT_EQ(f.size(), 5u) << line;
    got.emplace(f[0], f[1], f[2], f[3], f[4]);
  }
  EXPECT_EQ(got, t::fixture_quads(false));

  ASSERT_EQ(cli("export" + store() + " --out " + quote(dir / "q.tsv")).code, 0);
  EXPECT_EQ(t::read_file(dir / "q.tsv"), r.out);
}

TEST_F(CliFixture, ReloadingIsIdempotent) {
  const auto before = cli("export" + store()).out;
  const auto r = cli("load --store " + quote(dir / "store") + " --links " + quote(dir / "links.tsv") +
                     " --observations " + quote(dir / "observations.tsv"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("observations_inserted=0\n"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("inlinks_written=0\n"), std::string::npos) << r.out;
  EXPECT_EQ(cli("export" + store()).out, before);
}

TEST_F(CliFixture, AnalyticsCommands) {
  auto r = cli("coverage" + store());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("nodes="), std::string::npos);
  EXPECT_NE(r.out.find("uncrawled_fraction="), std::string::npos);

  r = cli("rank --window whole --top 3" + store());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = lines(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].substr(0, 2), "1\t");

  r = cli("rank --window 1999-01" + store());
  EXPECT_EQ(r.code, 0);
  EXPECT_TRUE(r.out.empty());
  EXPECT_NE(r.err.find("no rank"), std::string::npos);

  r = cli("compare --k 5" + store());
  ASSERT_EQ(r.code, 0) << r.err;
  const auto cmp = lines(r.out);
  ASSERT_FALSE(cmp.empty());
  EXPECT_EQ(cmp[0], "first\tsecond\toverlap\ttau");
  EXPECT_GT(cmp.size(), 1u);

  r = cli("timeline --uri http://example.org/b.html" + store());
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("Page B"), std::string::npos) << r.out;
}

TEST_F(CliFixture, ServeAnswersLinkQueriesAndStopsOnSignal) {
  const int port = free_port();
  const std::string cli_path = ARCHGRAPH_CLI;
  const std::string store_dir = (dir / "store").string();
  const std::string bind = "127.0.0.1:" + std::to_string(port);
  std::vector<std::string> args = {cli_path, "serve", "--store", store_dir, "--bind", bind};
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);
  pid_t pid = 0;
  ASSERT_EQ(posix_spawn(&pid, cli_path.c_str(), nullptr, nullptr, argv.data(), environ), 0);

  httplib::Client client("127.0.0.1", port);
  httplib::Result res;
  for (int i = 0; i < 100 && !res; ++i) {
    res = client.Get("/linkQuery?uri=http://www.example.org/b.html&format=json");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
  ASSERT_TRUE(res);
  EXPECT_EQ(res->status, 200);
  EXPECT_NE(res->body.find("Page B"), std::string::npos);
  const auto rdf = client.Get("/LinkService/linkQuery?uri=http://www.example.org/");
  ASSERT_TRUE(rdf);
  EXPECT_EQ(rdf->status, 200);
  EXPECT_NE(rdf->body.find("rdf:RDF"), std::string::npos);
  const auto bad = client.Get("/linkQuery");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);

  kill(pid, SIGTERM);
  int status = 0;
  waitpid(pid, &status, 0);
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 0);
}

TEST(Cli, RunAllWithConfig) {
  t::TempDir dir;
  const auto cdx = t::write_corpus(dir / "warcs", t::fixture_captures());
  std::string text = " CDX N b a m s k r M S V g\n";
  for (const auto& rec : cdx) text += format_cdx_line(rec) + "\n";
  t::write_file(dir / "a.cdx", text);
  t::write_file(dir / "p.conf", "cdx = a.cdx\ncorpus_root = warcs\nstore = store\nrun_dir = run\n");
  auto r = cli("run-all --config " + quote(dir / "p.conf"));
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("analyze"), std::string::npos) << r.err;
  EXPECT_TRUE(fs::exists(dir / "run/analyze/compare.tsv"));

  t::write_file(dir / "p2.conf", "cdx = a.cdx\ncorpus_root = gone\nstore = store\nrun_dir = run\n");
  EXPECT_EQ(cli("run-all --config " + quote(dir / "p2.conf")).code, 1);
  t::write_file(dir / "bad.rules", "nonsense\n");
  t::write_file(dir / "p3.conf", "cdx = a.cdx\ncorpus_root = warcs\nstore = s3\nrun_dir = r3\nrules = bad.rules\n");
  r = cli("run-all --config " + quote(dir / "p3.conf"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("filter"), std::string::npos) << r.err;
}
