// Command-line front end: fit / simulate / eval / convert.
//
// Exit codes: 0 success, 1 error, 2 fit ended on the invertibility boundary.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "varma/calibrate.hpp"
#include "varma/gradient.hpp"
#include "varma/model_io.hpp"
#include "varma/roots.hpp"
#include "varma/simulate.hpp"

namespace {

using namespace varma;
using nlohmann::json;

std::vector<ThetaPoly> read_seed_file(const std::string& path, Index q) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open seed file: " + path);
  json j;
  in >> j;
  std::vector<ThetaPoly> seeds;
  for (const auto& row : j) {
    VectorXd free = detail::vec_from_json(row);
    if (free.size() != q) throw std::invalid_argument("seed file: entry length != q");
    seeds.push_back(ThetaPoly::from_free(free));
  }
  if (seeds.empty()) throw std::invalid_argument("seed file: no seeds");
  return seeds;
}

int run_fit(const std::string& data_path, Index p, Index q, std::optional<Index> mcmillan,
            const RegressorSet& regs, const FitOptions& opts, const std::string& out_path) {
  const MatrixXd data = read_csv(data_path);
  const FitResult result = mcmillan ? fit_mcmillan(data, *mcmillan, regs, opts)
                                    : fit(data, p, q, regs, opts);
  const ModelDocument doc = ModelDocument::from_fit(result, regs);
  write_model(out_path, doc);
  std::cout << json{{"loglik", result.loglik},
                    {"aic", result.aic},
                    {"bic", result.bic},
                    {"p", result.p},
                    {"q", result.q},
                    {"boundary", result.boundary_flag},
                    {"model", out_path}}
                   .dump(2)
            << "\n";
  return result.boundary_flag ? 2 : 0;
}

int run_simulate(const std::string& model_path, Index t_len, std::uint64_t seed,
                 std::optional<Index> burn_in, const std::string& out_path) {
  const ModelDocument doc = read_model(model_path);
  if (doc.regs.trend_degree > 0 || doc.regs.seasonal_period > 1)
    throw std::invalid_argument(
        "simulate: deterministic regressors beyond the constant are not supported");
  NoiseConfig noise;
  noise.seed = seed;
  noise.burn_in = burn_in;
  const SampleMatrix sample = simulate_varma(doc.to_spec(), t_len, noise);
  write_csv(out_path, sample.values);
  return 0;
}

json matrix_list_json(const std::vector<MatrixXd>& ms) {
  json a = json::array();
  for (const auto& m : ms) a.push_back(detail::mat_to_json(m));
  return a;
}

int run_eval(const std::string& model_path, const std::string& data_path, bool with_grad) {
  const ModelDocument doc = read_model(model_path);
  const MatrixXd data = read_csv(data_path);
  const SampleMatrix xhat(data, doc.p);
  if (xhat.k() != doc.k) throw std::invalid_argument("eval: data column count != model k");
  const ThetaPoly theta = ThetaPoly::from_free(doc.theta_free);

  const LikelihoodReport rep = profile_loglik(theta, xhat, doc.regs);
  json out{{"loglik", rep.loglik},
           {"term_const", rep.term_const},
           {"term_omega", rep.term_omega},
           {"term_kbar", rep.term_kbar},
           {"term_trace", rep.term_trace},
           {"mu", detail::vec_to_json(rep.mu)},
           {"phi", matrix_list_json(rep.phi)},
           {"omega", detail::mat_to_json(rep.omega)},
           {"ridge_used", rep.ridge_used}};
  if (with_grad) {
    const GradientReport g = grad_profile_loglik(theta, xhat, doc.regs);
    out["gradient"] = detail::vec_to_json(g.grad);
    out["gradient_part_omega"] = detail::vec_to_json(g.part_omega);
    out["gradient_part_kbar"] = detail::vec_to_json(g.part_kbar);
  }
  std::cout << out.dump(2) << "\n";
  return 0;
}

int run_convert(const std::string& matrix_path, const std::string& out_path) {
  const MatrixVarma m = read_matrix_model(matrix_path);
  const VarmaSpec converted = matrix_to_scalar(m);
  const double deviation = transfer_function_deviation(m, converted);
  const ModelDocument doc = ModelDocument::from_spec(converted);
  json report{{"k", converted.k},
              {"p", converted.p},
              {"q", converted.q},
              {"verification",
               {{"points", 16}, {"radius", 0.5}, {"max_deviation", deviation}}}};
  if (!out_path.empty()) {
    write_model(out_path, doc);
    report["model"] = out_path;
    std::cout << report.dump(2) << "\n";
  } else {
    report["model"] = to_json(doc);
    std::cout << report.dump(2) << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scalar-MA VARMA likelihood toolkit"};
  app.require_subcommand(1);

  // fit
  auto* cmd_fit = app.add_subcommand("fit", "Maximum-likelihood fit from CSV data");
  std::string fit_data, fit_out = "model.json", seed_file;
  Index fit_p = 0, fit_q = 0;
  std::optional<Index> mcmillan;
  Index mcmillan_raw = -1;
  bool no_const = false, no_ridge = false;
  int trend_degree = 0, seasonal = 0, threads = 1, max_iters = 200;
  double grad_tol = 1e-6;
  cmd_fit->add_option("data", fit_data, "input CSV")->required();
  auto* opt_p = cmd_fit->add_option("--p", fit_p, "AR order");
  auto* opt_q = cmd_fit->add_option("--q", fit_q, "MA order");
  auto* opt_m = cmd_fit->add_option("--mcmillan", mcmillan_raw,
                                    "scan p = q = 0..m, keep the BIC-best order");
  cmd_fit->add_flag("--no-const", no_const, "drop the constant term");
  cmd_fit->add_option("--trend-degree", trend_degree, "add trend columns i^1..i^d");
  cmd_fit->add_option("--seasonal", seasonal, "seasonal dummy period");
  cmd_fit->add_option("--seeds", seed_file, "JSON file with starting theta rows");
  cmd_fit->add_option("--threads", threads, "parallel starts");
  cmd_fit->add_option("--max-iters", max_iters, "optimizer iteration cap");
  cmd_fit->add_option("--grad-tol", grad_tol, "gradient tolerance");
  cmd_fit->add_flag("--no-ridge", no_ridge, "fail instead of ridging a singular design");
  cmd_fit->add_option("-o,--output", fit_out, "output model path");
  opt_m->excludes(opt_p);
  opt_m->excludes(opt_q);

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "Draw a synthetic sample from a model");
  std::string sim_model, sim_out = "data.csv";
  Index sim_t = 0;
  std::uint64_t sim_seed = 0;
  Index burn_raw = -1;
  cmd_sim->add_option("model", sim_model, "model JSON")->required();
  cmd_sim->add_option("--T", sim_t, "sample length (T; output has T + p rows)")->required();
  cmd_sim->add_option("--seed", sim_seed, "RNG seed");
  cmd_sim->add_option("--burn-in", burn_raw, "burn-in rows (default 10(p+q+50))");
  cmd_sim->add_option("-o,--output", sim_out, "output CSV path");

  // eval
  auto* cmd_eval = app.add_subcommand("eval", "Profile likelihood report for a model on data");
  std::string eval_model, eval_data;
  bool with_grad = false;
  cmd_eval->add_option("model", eval_model, "model JSON")->required();
  cmd_eval->add_option("data", eval_data, "data CSV")->required();
  cmd_eval->add_flag("--gradient", with_grad, "include the analytic gradient");

  // convert
  auto* cmd_conv = app.add_subcommand("convert", "Matrix-MA model to scalar-MA form");
  std::string conv_model, conv_out;
  cmd_conv->add_option("model", conv_model, "matrix model JSON")->required();
  cmd_conv->add_option("-o,--output", conv_out, "output model path (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*cmd_fit) {
      if (mcmillan_raw >= 0) mcmillan = mcmillan_raw;
      if (!mcmillan && !*opt_p && !*opt_q)
        throw std::invalid_argument("fit: give --p/--q or --mcmillan");
      RegressorSet regs;
      regs.constant = !no_const;
      regs.trend_degree = trend_degree;
      regs.seasonal_period = seasonal;
      FitOptions opts;
      opts.max_iters = max_iters;
      opts.grad_tol = grad_tol;
      opts.threads = threads;
      opts.ridge = !no_ridge;
      if (!seed_file.empty()) opts.seeds = read_seed_file(seed_file, fit_q);
      return run_fit(fit_data, fit_p, fit_q, mcmillan, regs, opts, fit_out);
    }
    if (*cmd_sim)
      return run_simulate(sim_model, sim_t, sim_seed,
                          burn_raw >= 0 ? std::optional<Index>(burn_raw) : std::nullopt,
                          sim_out);
    if (*cmd_eval) return run_eval(eval_model, eval_data, with_grad);
    if (*cmd_conv) return run_convert(conv_model, conv_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
