#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "exwkb/pipeline.hpp"

namespace {

std::vector<double> parse_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw exwkb::config_error("bad --sweep entry '" + item + "'");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stokes graphs, spectral scattering diagrams and Voros data of a spectral curve"};
  exwkb::run_config cfg;
  double hbar_mod = 0.0, hbar_arg = 0.0;
  std::string normalization = "trivial", sweep;
  app.add_option("--input", cfg.input, "spectral data JSON")->required();
  auto* mod = app.add_option("--hbar-mod", hbar_mod, "|hbar| (default from the input)");
  auto* arg = app.add_option("--hbar-arg", hbar_arg, "arg hbar in radians (default from the input)");
  app.add_option("--truncation", cfg.truncation, "Novikov truncation W")->capture_default_str();
  app.add_option("--hbar-order", cfg.hbar_order, "hbar order N")->capture_default_str();
  app.add_option("--normalization", normalization, "trivial or formal")->check(CLI::IsMember({"trivial", "formal"}))->capture_default_str();
  app.add_option("--window", cfg.window, "window radius (0: 4 x configuration scale)")->capture_default_str();
  app.add_option("--sweep", sweep, "comma separated hbar phases");
  app.add_flag("--ode-check", cfg.ode_check, "compare Voros symbols with ODE cross-ratios");
  app.add_option("--out", cfg.out, "output directory")->capture_default_str();
  app.add_option("--tol", cfg.tol, "tracer step tolerance")->capture_default_str();
  app.add_option("--tol-x", cfg.tol_x, "collision refinement tolerance")->capture_default_str();
  app.add_option("--delta-tp", cfg.delta_tp, "turning point exclusion radius (0: 1e-3 x closest singular pair)")->capture_default_str();
  app.add_option("--prune-tol", cfg.prune_tol, "series coefficients below this count as zero")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : exwkb::exit_code(exwkb::failure_class::input);
  }
  if (*mod) cfg.hbar_mod = hbar_mod;
  if (*arg) cfg.hbar_arg = hbar_arg;
  cfg.normalization = normalization == "formal" ? exwkb::normalization_mode::formal : exwkb::normalization_mode::trivial;

  try {
    cfg.sweep = parse_list(sweep);
    const auto r = exwkb::run_pipeline(cfg);
    exwkb::write_artifacts(r, cfg.out);
    for (const auto& d : r.diagnostics) std::cerr << "note: " << d << '\n';
    for (const auto& f : r.sweep)
      if (f.value("degenerate", false)) std::cerr << "sweep: theta = " << f["theta"].get<double>() << " is degenerate\n";
    if (r.monodromy.contains("ode_check"))
      std::cout << "ode check: " << (r.monodromy["ode_check"]["pass"].get<bool>() ? "pass" : "fail") << '\n';
    if (r.degeneracy) {
      std::cerr << "degenerate: " << *r.degeneracy << '\n';
      return exwkb::exit_code(exwkb::failure_class::degeneracy);
    }
    std::cout << "wrote " << cfg.out << '\n';
    return 0;
  } catch (const exwkb::error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exwkb::exit_code(e.cls());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exwkb::exit_code(exwkb::failure_class::numeric);
  }
}
