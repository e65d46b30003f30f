#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "support/random_models.hpp"
#include "varma/model_io.hpp"

using namespace varma;
using Catch::Approx;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("varma_io_test_" + name);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("model document round trip is byte-identical") {
  std::mt19937_64 rng(3);
  ModelDocument doc;
  doc.k = 2;
  doc.p = 1;
  doc.q = 2;
  doc.theta_free = VectorXd(2);
  doc.theta_free << 1.0 / 3.0, -0.123456789012345678;
  doc.mu = testsup::random_matrix(rng, 2, 1);
  doc.phi = {testsup::random_matrix(rng, 2, 2)};
  doc.omega = testsup::random_spd(rng, 2);
  doc.has_scores = true;
  doc.loglik = -123.4567890123456789;
  doc.aic = 2.0 * 123.45;
  doc.bic = 260.000000001;
  doc.has_fit_metadata = true;
  doc.fit_t = 512;
  doc.seeds_used = 9;
  doc.iterations = 113;
  doc.converged = true;

  const auto p1 = temp_file("m1.json");
  const auto p2 = temp_file("m2.json");
  write_model(p1.string(), doc);
  const ModelDocument back = read_model(p1.string());
  write_model(p2.string(), back);
  REQUIRE(slurp(p1) == slurp(p2));
  REQUIRE(back.theta_free == doc.theta_free);
  REQUIRE(back.omega == doc.omega);
  REQUIRE(back.loglik == doc.loglik);

  const VarmaSpec spec = back.to_spec();
  REQUIRE(spec.k == 2);
  REQUIRE(spec.theta.q() == 2);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);
}

TEST_CASE("model document validation") {
  ModelDocument doc;
  doc.k = 1;
  doc.q = 1;
  doc.theta_free = VectorXd::Zero(2);  // wrong length
  doc.mu = VectorXd::Zero(1);
  doc.omega = MatrixXd::Identity(1, 1);
  const auto path = temp_file("bad.json");
  write_model(path.string(), doc);
  REQUIRE_THROWS_AS(read_model(path.string()), std::invalid_argument);
  std::filesystem::remove(path);
}

TEST_CASE("csv io") {
  SECTION("write then read returns the exact values") {
    std::mt19937_64 rng(4);
    const MatrixXd m = testsup::random_matrix(rng, 10, 3);
    const auto path = temp_file("data.csv");
    write_csv(path.string(), m);
    const MatrixXd back = read_csv(path.string());
    REQUIRE(back.rows() == 10);
    REQUIRE((back - m).cwiseAbs().maxCoeff() == 0.0);
    std::filesystem::remove(path);
  }
  SECTION("header detection") {
    const auto path = temp_file("hdr.csv");
    {
      std::ofstream out(path);
      out << "a,b\n1,2\n3,4\n";
    }
    const MatrixXd m = read_csv(path.string());
    REQUIRE(m.rows() == 2);
    REQUIRE(m(1, 1) == 4.0);
    std::filesystem::remove(path);
  }
  SECTION("headerless numeric first row") {
    const auto path = temp_file("nohdr.csv");
    {
      std::ofstream out(path);
      out << "1.5,2\n3,4\n";
    }
    const MatrixXd m = read_csv(path.string());
    REQUIRE(m.rows() == 2);
    REQUIRE(m(0, 0) == 1.5);
    std::filesystem::remove(path);
  }
  SECTION("ragged and non-numeric rows are rejected") {
    const auto path = temp_file("bad.csv");
    {
      std::ofstream out(path);
      out << "1,2\n3\n";
    }
    REQUIRE_THROWS_AS(read_csv(path.string()), std::invalid_argument);
    {
      std::ofstream out(path);
      out << "1,2\n3,oops\n";
    }
    REQUIRE_THROWS_AS(read_csv(path.string()), std::invalid_argument);
    std::filesystem::remove(path);
  }
}

TEST_CASE("matrix model document") {
  const auto path = temp_file("matrix.json");
  {
    std::ofstream out(path);
    out << R"({
      "k": 2,
      "ma": [[[0.41, -0.32], [-2.10, -0.23]]],
      "ar": [[[0.02, 0.40], [1.06, -0.25]]],
      "omega": [[1.0, 0.0], [0.0, 1.0]]
    })";
  }
  const MatrixVarma m = read_matrix_model(path.string());
  REQUIRE(m.k == 2);
  REQUIRE(m.ma.size() == 2);
  REQUIRE(m.ma[0].isIdentity(0.0));
  REQUIRE(m.ma[1](0, 0) == Approx(0.41));
  REQUIRE(m.ar[1](1, 0) == Approx(1.06));
  std::filesystem::remove(path);
}
