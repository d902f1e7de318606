#include "dbspace/cli.hpp"

#include "fixtures.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace dbspace;
namespace fs = std::filesystem;

namespace {

Json exp_pair_config(double a, const std::string& out) {
  Json em = efun_to_json(fixtures::exp_minus(a, 1));
  Json ep = efun_to_json(fixtures::exp_plus(a, 1));
  return Json{{"schema_version", 1},
              {"construction", Json{{"pair", Json{{"Eminus", em}, {"Eplus", ep}}}}},
              {"seed", 7},
              {"output_dir", out}};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

fs::path fresh_dir(const std::string& tag) {
  fs::path p = fs::temp_directory_path() / ("dbspace_test_" + tag);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int count_csv_rows(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  int rows = -1;  // skip header
  while (std::getline(in, line))
    if (!line.empty()) ++rows;
  return rows;
}

}  // namespace

TEST_CASE("EFun JSON round-trips through evaluation") {
  SplitMix64 rng(19);
  std::vector<EFun> funs;
  funs.push_back(fixtures::exp_plus(1.3, 2));
  funs.push_back(EFun::pencil(fixtures::random_matrix(2, 2, rng),
                              fixtures::random_matrix(2, 2, rng)));
  funs.push_back(EFun::polynomial({fixtures::random_matrix(2, 2, rng),
                                   fixtures::random_matrix(2, 2, rng)}));
  funs.push_back(EFun::exponential_sum({{Complex(0, -1), fixtures::random_matrix(2, 2, rng)},
                                        {Complex(0, 2), fixtures::random_matrix(2, 2, rng)}}));
  funs.push_back(EFun::canonical(fixtures::canon_q_spec(0.2, 1e-3), 0.8, Component::Minus));
  funs.push_back(EFun::potapov_halfplane(fixtures::random_contraction(2, rng, 0.6)));
  for (const EFun& f : funs) {
    EFun back = efun_from_json(efun_to_json(f));
    CHECK(back.kind() == f.kind());
    CHECK(back.entire() == f.entire());
    Complex z = back.entire() ? rng.complex_in_box(-1, 1, -1, 1)
                              : rng.complex_in_box(-1, 1, 0.1, 1);
    CHECK(opnorm(back(z) - f(z)) < 1e-14);
  }
}

TEST_CASE("canonical spec JSON builtins") {
  Json j{{"n", 1}, {"a", 1.0}, {"step", 1e-3}, {"potential", "constant:0.25"}};
  CanonicalSystemSpec s = canonical_spec_from_json(j);
  CHECK(s.potential == CanonicalSystemSpec::Potential::Constant);
  CHECK(std::abs(s.constant_q(0, 0) - 0.25) < 1e-15);

  Json z{{"n", 2}, {"a", 0.5}, {"potential", "zero"}};
  CanonicalSystemSpec sz = canonical_spec_from_json(z);
  CHECK(sz.potential == CanonicalSystemSpec::Potential::Zero);
  CHECK(std::abs(sz.step - 0.0005) < 1e-12);  // default a/1000

  CanonicalSystemSpec rt = canonical_spec_from_json(canonical_spec_to_json(s));
  CHECK(opnorm(rt.q(0.3) - s.q(0.3)) < 1e-15);
}

TEST_CASE("potential CSV loader") {
  fs::path dir = fresh_dir("potcsv");
  fs::path file = dir / "q.csv";
  {
    std::ofstream out(file);
    out << "r,q00_re,q00_im\n0.0,0.1,0.0\n0.5,0.2,0.0\n1.0,0.3,0.0\n";
  }
  Json j{{"n", 1}, {"a", 1.0}, {"step", 1e-3}, {"potential", std::string("csv:") + file.string()}};
  CanonicalSystemSpec s = canonical_spec_from_json(j);
  CHECK(std::abs(s.q(0.25)(0, 0).real() - 0.15) < 1e-12);  // piecewise linear
}

TEST_CASE("validate command") {
  fs::path out = fresh_dir("validate");
  Json cfg = exp_pair_config(1.0, out.string());
  cli::RunConfig rc = cli::parse_config(cfg, cfg.dump());
  CHECK(cli::run(rc, "validate") == 0);

  Json rep = Json::parse(slurp(out / "validate.json"));
  CHECK(rep["passed"].get<bool>());
  CHECK(rep["schema_version"] == 1);
  CHECK(rep["toolkit_version"] == std::string(kVersion));
  CHECK(rep["config_hash"] == hash_hex(cfg.dump()));
  CHECK(rep["data"]["conjugate_symmetry_residual"].get<double>() < 1e-10);

  // role-swapped pair fails with exit 2
  Json bad = cfg;
  std::swap(bad["construction"]["pair"]["Eminus"], bad["construction"]["pair"]["Eplus"]);
  bad["output_dir"] = (out / "bad").string();
  CHECK(cli::run(cli::parse_config(bad, bad.dump()), "validate") == 2);
}

TEST_CASE("spectrum command writes the node CSV") {
  fs::path out = fresh_dir("spectrum");
  Json cfg = exp_pair_config(kPi, out.string());
  cfg["commands"] = Json{{"spectrum", Json{{"V", "identity"}, {"interval", {-3.5, 3.5}}}}};
  CHECK(cli::run(cli::parse_config(cfg, cfg.dump()), "spectrum") == 0);
  CHECK(count_csv_rows(out / "spectrum.csv") == 7);
  CHECK(fs::exists(out / "sigma_profile.csv"));
  Json rep = Json::parse(slurp(out / "spectrum.json"));
  CHECK(rep["data"]["nodes"].size() == 7);
}

TEST_CASE("kernel-eval, gram, positivity and isometry commands") {
  fs::path out = fresh_dir("cmds");
  Json cfg = exp_pair_config(kPi, out.string());
  cfg["commands"] =
      Json{{"kernel-eval", Json{{"xi", {0.0, 0.0}}, {"z", {0.5, 0.0}}}},
           {"gram", Json{{"points", {{0.0, 0.0}, {1.0, 0.0}}},
                         {"vectors", {{{1.0, 0.0}}, {{1.0, 0.0}}}}}},
           {"positivity", Json{{"count", 8}, {"draws", 20}, {"box", {-2.0, 2.0, -2.0, 2.0}}}},
           {"isometry-check", Json{{"beta", {0.0, 1.0}}, {"w", {0.4, 0.0}}}}};
  cli::RunConfig rc = cli::parse_config(cfg, cfg.dump());
  CHECK(cli::run(rc, "kernel-eval") == 0);
  CHECK(cli::run(rc, "gram") == 0);
  CHECK(cli::run(rc, "positivity") == 0);
  CHECK(cli::run(rc, "isometry-check") == 0);

  Json kj = Json::parse(slurp(out / "kernel-eval.json"));
  double got = kj["data"]["kernel"][0][0][0].get<double>();
  CHECK(std::abs(got - fixtures::pw_kernel(kPi, 0.0, 0.5).real()) < 1e-12);
  CHECK(fs::exists(out / "gram.csv"));

  Json gj = Json::parse(slurp(out / "gram.json"));
  CHECK(gj["data"]["min_eigenvalue"].get<double>() > -1e-10);
}

TEST_CASE("recover-e and inner-check and subspace-kernel commands") {
  fs::path out = fresh_dir("recover");
  Json cfg = exp_pair_config(1.0, out.string());
  cfg["commands"] = Json{{"recover-e", Json{{"beta", {0.0, 1.0}}}},
                         {"subspace-kernel",
                          Json{{"beta", {0.0, 1.0}}, {"xi", {0.3, 0.0}}, {"z", {0.7, 0.0}}}}};
  cli::RunConfig rc = cli::parse_config(cfg, cfg.dump());
  CHECK(cli::run(rc, "recover-e") == 0);
  CHECK(cli::run(rc, "inner-check") == 0);
  CHECK(cli::run(rc, "subspace-kernel") == 0);
  Json rj = Json::parse(slurp(out / "recover-e.json"));
  CHECK(rj["data"]["max_rebuild_error"].get<double>() < 1e-9);
}

TEST_CASE("reconstruct command") {
  fs::path out = fresh_dir("reconstruct");
  Json cfg = exp_pair_config(kPi, out.string());
  cfg["commands"] = Json{
      {"reconstruct",
       Json{{"spectrum", Json{{"V", "identity"}, {"interval", {-30.5, 30.5}},
                              {"grid_count", 4000}}},
            {"f", Json{{"points", {{0.4, 0.0}, {-1.1, 0.0}}},
                       {"coeffs", {{{1.0, 0.0}}, {{0.5, -0.2}}}}}},
            {"eval", {{-2.0, 0.0}, {0.0, 0.0}, {1.3, 0.0}}},
            {"tol", 0.05}}}};
  CHECK(cli::run(cli::parse_config(cfg, cfg.dump()), "reconstruct") == 0);
  Json rep = Json::parse(slurp(out / "reconstruct.json"));
  CHECK(rep["data"]["relative_sup_error"].get<double>() < 0.05);
}

TEST_CASE("canonical construction and canonical-identity command") {
  fs::path out = fresh_dir("canonical");
  Json cfg{{"schema_version", 1},
           {"construction",
            Json{{"canonical",
                  Json{{"system", canonical_spec_to_json(fixtures::canon_zero_spec(1e-3))},
                       {"r", 1.0}}}}},
           {"seed", 1},
           {"output_dir", out.string()}};
  cfg["commands"] = Json{{"canonical-identity",
                          Json{{"z", {0.0, 1.0}}, {"xi", {0.0, 1.0}}, {"tol", 1e-6}}}};
  cli::RunConfig rc = cli::parse_config(cfg, cfg.dump());
  CHECK(cli::run(rc, "canonical-identity") == 0);
  CHECK(fs::exists(out / "canonical-trace.csv"));
  CHECK(cli::run(rc, "validate") == 0);
  Json rep = Json::parse(slurp(out / "validate.json"));
  CHECK(rep["data"]["canonical_proviso"]["positivity_witnessed"].get<bool>());
}

TEST_CASE("output_dir falls back to the environment variable") {
  fs::path out = fresh_dir("envdir");
  setenv("DBSPACE_OUTPUT_DIR", out.string().c_str(), 1);
  Json cfg = exp_pair_config(1.0, "ignored");
  cfg.erase("output_dir");
  cli::RunConfig rc = cli::parse_config(cfg, cfg.dump());
  unsetenv("DBSPACE_OUTPUT_DIR");
  CHECK(rc.output_dir == out.string());
  CHECK(cli::run(rc, "validate") == 0);
  CHECK(fs::exists(out / "validate.json"));
}

TEST_CASE("usage errors") {
  Json cfg = exp_pair_config(1.0, ".");
  cli::RunConfig rc = cli::parse_config(cfg, cfg.dump());
  CHECK_THROWS_AS(cli::run(rc, "no-such-command"), cli::UsageError);
  CHECK_THROWS_AS(cli::run(rc, "canonical-identity"), cli::UsageError);

  Json noc = Json{{"seed", 1}};
  CHECK_THROWS_AS(cli::parse_config(noc, noc.dump()), cli::UsageError);
  CHECK_THROWS_AS(cli::load_config("/nonexistent/config.json"), cli::UsageError);

  Json noseed = exp_pair_config(1.0, ".");
  noseed.erase("seed");
  cli::RunConfig rns = cli::parse_config(noseed, noseed.dump());
  CHECK_THROWS_AS(cli::run(rns, "positivity"), cli::UsageError);
}

TEST_CASE("reports are byte-identical across reruns") {
  for (const char* cmd : {"positivity", "spectrum"}) {
    fs::path o1 = fresh_dir(std::string("det1_") + cmd);
    fs::path o2 = fresh_dir(std::string("det2_") + cmd);
    Json base = exp_pair_config(kPi, "");
    base["commands"] =
        Json{{"positivity", Json{{"count", 10}, {"draws", 50}}},
             {"spectrum", Json{{"V", "identity"}, {"interval", {-2.5, 2.5}}}}};
    Json c1 = base;
    c1["output_dir"] = o1.string();
    Json c2 = base;
    c2["output_dir"] = o2.string();
    // hash must see identical bytes, so hash the shared base document
    CHECK(cli::run(cli::parse_config(c1, base.dump()), cmd) == 0);
    CHECK(cli::run(cli::parse_config(c2, base.dump()), cmd) == 0);
    std::string name = std::string(cmd) + ".json";
    std::string a = slurp(o1 / name);
    std::string b = slurp(o2 / name);
    CHECK(a == b);
    if (std::string(cmd) == "spectrum")
      CHECK(slurp(o1 / "spectrum.csv") == slurp(o2 / "spectrum.csv"));
  }
}

#ifdef DBTOOL_BINARY
TEST_CASE("dbtool exit codes") {
  fs::path dir = fresh_dir("bin");
  fs::path cfgfile = dir / "cfg.json";
  {
    std::ofstream out(cfgfile, std::ios::binary);
    out << exp_pair_config(1.0, (dir / "out").string()).dump(2);
  }
  std::string base = std::string(DBTOOL_BINARY);
  auto run_tool = [&](const std::string& args) {
    int raw = std::system((base + " " + args + " > /dev/null 2>&1").c_str());
    return WEXITSTATUS(raw);
  };
  CHECK(run_tool("validate --config " + cfgfile.string()) == 0);
  CHECK(run_tool("frobnicate --config " + cfgfile.string()) == 1);
  CHECK(run_tool("validate --config /does/not/exist.json") == 1);
  CHECK(run_tool("") == 1);  // missing required arguments
}
#endif
