// epf command line: thin shell over the libepf C API.

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "epf/epf_c.h"

namespace {

int report_failure(int status, const char* command) {
  // machine-readable error on stderr
  std::string message = epf_last_error();
  std::string escaped;
  for (char c : message) {
    if (c == '"' || c == '\\') escaped += '\\';
    if (c == '\n') {
      escaped += "\\n";
      continue;
    }
    escaped += c;
  }
  std::fprintf(stderr, "{\"error\":{\"command\":\"%s\",\"status\":%d,\"message\":\"%s\"}}\n",
               command, status, escaped.c_str());
  return status == EPF_OK ? 1 : status;
}

struct ForecastHandle {
  epf_forecast* ptr = nullptr;
  ~ForecastHandle() { epf_forecast_free(ptr); }
};

int read_forecasts(const std::vector<std::string>& paths,
                   std::vector<ForecastHandle>& out, const char* command) {
  out.resize(paths.size());
  for (std::size_t i = 0; i < paths.size(); ++i)
    if (int rc = epf_forecast_read_csv(paths[i].c_str(), &out[i].ptr))
      return report_failure(rc, command);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"epf: day-ahead electricity price forecasting toolkit"};
  app.set_version_flag("--version", epf_version());
  app.require_subcommand(1);

  // synth
  auto* synth = app.add_subcommand(
      "synth", "Generate a synthetic coupled-market dataset as CSV files");
  std::string synth_config, synth_out;
  synth->add_option("--config", synth_config, "synthetic config JSON")
      ->required();
  synth->add_option("--out", synth_out, "output directory")->required();

  // backtest
  auto* backtest = app.add_subcommand(
      "backtest", "Run the full backtest grid from a run config");
  std::string bt_config, bt_out;
  long long bt_seed = -1;
  backtest->add_option("--config", bt_config, "run config JSON")->required();
  backtest->add_option("--out", bt_out, "output directory (overrides config)");
  backtest->add_option("--seed", bt_seed, "seed override");

  // ensemble
  auto* ens = app.add_subcommand("ensemble",
                                 "Average member forecast CSVs pointwise");
  std::vector<std::string> ens_members;
  std::string ens_out;
  bool ens_strict = false;
  ens->add_option("members", ens_members, "member forecast CSVs")
      ->required()
      ->expected(-1);
  ens->add_option("--out", ens_out, "output CSV")->required();
  ens->add_flag("--strict-ensemble", ens_strict,
                "require exactly 8 members");

  // evaluate
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a forecast CSV against actuals and the naive");
  std::string ev_forecast, ev_actual, ev_naive, ev_slice = "all", ev_out;
  evaluate->add_option("--forecast", ev_forecast, "forecast CSV")->required();
  evaluate->add_option("--actual", ev_actual, "actual prices CSV")->required();
  evaluate->add_option("--naive", ev_naive, "naive forecast CSV")->required();
  evaluate->add_option("--slice", ev_slice, "all|bottom5|top5")
      ->check(CLI::IsMember({"all", "bottom5", "top5"}));
  evaluate->add_option("--out", ev_out, "write report here instead of stdout");

  // gw
  auto* gw = app.add_subcommand(
      "gw", "One-sided Giacomini-White matrix over forecast CSVs");
  std::vector<std::string> gw_forecasts;
  std::string gw_actual, gw_out;
  gw->add_option("forecasts", gw_forecasts, "forecast CSVs (>= 2)")
      ->required()
      ->expected(-1);
  gw->add_option("--actual", gw_actual, "actual prices CSV")->required();
  gw->add_option("--out", gw_out, "write matrix JSON here instead of stdout");

  // anc
  auto* anc = app.add_subcommand(
      "anc", "Absolute normalized contributions from saved LEAR fits");
  std::vector<std::string> anc_fits;
  std::string anc_config, anc_out;
  anc->add_option("fits", anc_fits, "fit JSON files")->required()->expected(-1);
  anc->add_option("--config", anc_config, "run config JSON (data source)")
      ->required();
  anc->add_option("--out", anc_out, "write report here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  if (synth->parsed()) {
    if (int rc = epf_synth_to_dir(synth_config.c_str(), synth_out.c_str()))
      return report_failure(rc, "synth");
    std::printf("wrote synthetic dataset to %s\n", synth_out.c_str());
    return 0;
  }

  if (backtest->parsed()) {
    if (int rc = epf_run(bt_config.c_str(),
                         bt_out.empty() ? nullptr : bt_out.c_str(), bt_seed))
      return report_failure(rc, "backtest");
    std::printf("backtest complete\n");
    return 0;
  }

  if (ens->parsed()) {
    std::vector<ForecastHandle> members;
    if (int rc = read_forecasts(ens_members, members, "ensemble")) return rc;
    std::vector<const epf_forecast*> ptrs;
    for (const auto& m : members) ptrs.push_back(m.ptr);
    ForecastHandle result;
    if (int rc = epf_ensemble(ptrs.data(), ptrs.size(), ens_strict ? 1 : 0,
                              &result.ptr))
      return report_failure(rc, "ensemble");
    if (int rc = epf_forecast_write_csv(result.ptr, ens_out.c_str()))
      return report_failure(rc, "ensemble");
    return 0;
  }

  if (evaluate->parsed()) {
    ForecastHandle f, a, n;
    if (int rc = epf_forecast_read_csv(ev_forecast.c_str(), &f.ptr))
      return report_failure(rc, "evaluate");
    if (int rc = epf_forecast_read_csv(ev_actual.c_str(), &a.ptr))
      return report_failure(rc, "evaluate");
    if (int rc = epf_forecast_read_csv(ev_naive.c_str(), &n.ptr))
      return report_failure(rc, "evaluate");
    char* report = nullptr;
    if (int rc = epf_evaluate_json(f.ptr, a.ptr, n.ptr, ev_slice.c_str(),
                                   &report))
      return report_failure(rc, "evaluate");
    if (ev_out.empty()) {
      std::printf("%s\n", report);
    } else {
      std::FILE* out = std::fopen(ev_out.c_str(), "wb");
      if (!out) {
        epf_free_string(report);
        std::fprintf(stderr, "{\"error\":{\"command\":\"evaluate\",\"message\":\"cannot write %s\"}}\n",
                     ev_out.c_str());
        return EPF_ERR_IO;
      }
      std::fputs(report, out);
      std::fclose(out);
    }
    epf_free_string(report);
    return 0;
  }

  if (gw->parsed()) {
    std::vector<ForecastHandle> forecasts;
    if (int rc = read_forecasts(gw_forecasts, forecasts, "gw")) return rc;
    ForecastHandle actual;
    if (int rc = epf_forecast_read_csv(gw_actual.c_str(), &actual.ptr))
      return report_failure(rc, "gw");
    std::vector<const epf_forecast*> ptrs;
    for (const auto& f : forecasts) ptrs.push_back(f.ptr);
    char* matrix = nullptr;
    char* table = nullptr;
    if (int rc = epf_gw_matrix_json(ptrs.data(), ptrs.size(), actual.ptr,
                                    &matrix, &table))
      return report_failure(rc, "gw");
    std::printf("%s\n", table);
    if (gw_out.empty()) {
      std::printf("%s\n", matrix);
    } else {
      std::FILE* out = std::fopen(gw_out.c_str(), "wb");
      if (out) {
        std::fputs(matrix, out);
        std::fclose(out);
      }
    }
    epf_free_string(matrix);
    epf_free_string(table);
    return 0;
  }

  if (anc->parsed()) {
    std::vector<const char*> paths;
    for (const auto& p : anc_fits) paths.push_back(p.c_str());
    char* report = nullptr;
    if (int rc = epf_anc_json(paths.data(), paths.size(), anc_config.c_str(),
                              &report))
      return report_failure(rc, "anc");
    if (anc_out.empty()) {
      std::printf("%s\n", report);
    } else {
      std::FILE* out = std::fopen(anc_out.c_str(), "wb");
      if (out) {
        std::fputs(report, out);
        std::fclose(out);
      }
    }
    epf_free_string(report);
    return 0;
  }
  return 0;
}
