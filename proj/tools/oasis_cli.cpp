// oasis: command line front end.
//
//   oasis generate  --out pool.csv [--N 20000 --matches 100 --score-model calibrated ...]
//   oasis subsample --pool in.csv --size 5000 --out out.csv
//   oasis run       spec.conf
//   oasis diagnose  --pool pool.csv --trace trace.csv --out kl.csv
//   oasis serve     --data-dir state --port 8080 [--token T]
//
// Library errors exit with 2 + their category index (see oasis::exit_code).

#include <atomic>
#include <csignal>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "oasis/bayes_model.hpp"
#include "oasis/config.hpp"
#include "oasis/error.hpp"
#include "oasis/harness.hpp"
#include "oasis/http_api.hpp"
#include "oasis/run_spec.hpp"
#include "oasis/service.hpp"
#include "oasis/trace_io.hpp"

using namespace oasis;

namespace {

HttpApi* g_api = nullptr;

void on_signal(int) {
  if (g_api) g_api->stop();
}

ScoreKind score_kind_from(const std::string& s) {
  if (s == "probability") return ScoreKind::probability;
  if (s == "raw") return ScoreKind::raw;
  return ScoreKind::automatic;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OASIS F-measure estimation for entity resolution"};
  app.require_subcommand(1);

  // generate
  SyntheticPoolParams gen;
  std::string gen_out, gen_model = "calibrated";
  auto* g = app.add_subcommand("generate", "write a synthetic pool");
  g->add_option("--out", gen_out, "output CSV")->required();
  g->add_option("--N", gen.N, "pool size");
  g->add_option("--matches", gen.num_matches, "number of true matches");
  g->add_option("--score-model", gen_model, "calibrated or raw")->check(CLI::IsMember({"calibrated", "raw"}));
  g->add_option("--noise", gen.noise, "prediction noise");
  g->add_option("--seed", gen.seed, "generator seed");
  g->add_option("--separation-shape", gen.separation_shape, "shape of the Beta(a,a) component");
  g->add_option("--low-score-match-share", gen.low_score_match_share, "share of matches hidden in the bulk");
  g->add_option("--raw-scale", gen.raw_scale, "scale of raw (logit) scores");

  // subsample
  std::string sub_in, sub_out, sub_kind = "auto";
  std::size_t sub_size = 0;
  std::uint64_t sub_seed = 0;
  auto* s = app.add_subcommand("subsample", "draw a subset of a pool without replacement");
  s->add_option("--pool", sub_in, "input CSV")->required();
  s->add_option("--size", sub_size, "target size")->required();
  s->add_option("--seed", sub_seed, "seed");
  s->add_option("--out", sub_out, "output CSV")->required();
  s->add_option("--score-kind", sub_kind)->check(CLI::IsMember({"auto", "probability", "raw"}));

  // run
  std::string spec_path;
  auto* r = app.add_subcommand("run", "run an experiment from a key = value spec file");
  r->add_option("spec", spec_path, "spec file")->required();

  // diagnose
  std::string d_pool, d_trace, d_out, d_kind = "auto";
  std::vector<std::string> d_settings;
  std::size_t d_stride = 1;
  auto* d = app.add_subcommand("diagnose", "KL and pi error series for a stored OASIS trace");
  d->add_option("--pool", d_pool, "pool CSV with ground truth")->required();
  d->add_option("--trace", d_trace, "trace CSV written by run")->required();
  d->add_option("--out", d_out, "output CSV (default stdout)");
  d->add_option("--set", d_settings, "sampler setting used for the run, key=value (repeatable)");
  d->add_option("--stride", d_stride, "emit every n-th iteration");
  d->add_option("--score-kind", d_kind)->check(CLI::IsMember({"auto", "probability", "raw"}));

  // serve
  std::string data_dir, host = "127.0.0.1", token;
  int port = 8080;
  double idle_minutes = 30;
  auto* sv = app.add_subcommand("serve", "start the labelling service");
  sv->add_option("--data-dir", data_dir, "event log and session files")->required();
  sv->add_option("--host", host);
  sv->add_option("--port", port);
  sv->add_option("--token", token, "static bearer token (empty disables the check)")->envname("OASIS_TOKEN");
  sv->add_option("--idle-minutes", idle_minutes, "idle time before a session reports paused");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exit_code(ErrorCategory::parameter);
  }

  try {
    if (*g) {
      gen.score_model = gen_model == "raw" ? ScoreModel::raw : ScoreModel::calibrated;
      save_pool(gen_out, generate_synthetic_pool(gen));
    } else if (*s) {
      const Pool pool = load_pool(sub_in, FormatOptions{',', score_kind_from(sub_kind)});
      save_pool(sub_out, subsample_pool(pool, sub_size, sub_seed));
    } else if (*r) {
      const RunSpec spec = load_run_spec(spec_path);
      const ExperimentResult result = run_experiment(spec.experiment);
      write_experiment(spec, result);
      std::cout << "true_f " << format_real(result.true_f) << "\n";
      for (const auto& m : result.metrics) {
        const auto reach = budget_to_reach(m, 0.05);
        std::cout << m.strategy << " budget_to_abs_err_0.05 " << (reach ? std::to_string(*reach) : "none")
                  << "\n";
      }
    } else if (*d) {
      const Pool pool = load_pool(d_pool, FormatOptions{',', score_kind_from(d_kind)});
      SamplerConfig cfg;
      for (const auto& kv : d_settings) {
        const auto parsed = parse_key_values(kv);
        if (parsed.size() != 1) throw Error(ErrorCategory::parameter, "--set expects key=value", "set");
        set_config_field(cfg, parsed[0].first, parsed[0].second);
      }
      cfg.validate();
      RunTrace run = load_trace(d_trace, pool);
      const Strata strata = csf_stratify(pool, cfg.desired_K, cfg.histogram_bins);
      const double eta = cfg.eta.value_or(2.0 * static_cast<double>(strata.count()));
      const InitialModel init = initialize_model(pool, strata, cfg.alpha, cfg.tau, eta);
      run.prior_pi0 = init.prior_pi0;
      run.eta = eta;
      run.initial_f = init.initial_f;
      const auto series = kl_to_optimal(run, pool, strata, cfg.alpha, cfg.prior_decay, d_stride);
      std::ofstream file;
      if (!d_out.empty()) {
        file.open(d_out, std::ios::binary);
        if (!file) throw Error(ErrorCategory::io, "cannot write " + d_out);
      }
      std::ostream& out = d_out.empty() ? std::cout : file;
      out << "t,budget,kl,pi_abs_err,v_abs_err\n";
      for (const auto& p : series)
        out << p.t << ',' << p.budget << ',' << format_real(p.kl) << ',' << format_real(p.pi_abs_err) << ','
            << format_real(p.v_abs_err) << '\n';
    } else if (*sv) {
      ServiceOptions opts;
      opts.data_dir = data_dir;
      opts.idle_window = std::chrono::milliseconds(static_cast<long long>(idle_minutes * 60000.0));
      SessionStore store(opts);
      HttpApi api(store, token);
      const int bound = api.bind(host, port);
      if (bound < 0) throw Error(ErrorCategory::io, "cannot bind " + host + ":" + std::to_string(port));
      g_api = &api;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cerr << "listening on " << host << ":" << bound << " (" << store.session_ids().size()
                << " sessions recovered)\n";
      api.serve();
      g_api = nullptr;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.category()) << "]";
    if (e.field()) std::cerr << " field " << *e.field();
    if (e.row()) std::cerr << " row " << *e.row();
    std::cerr << ": " << e.what() << "\n";
    return exit_code(e.category());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
