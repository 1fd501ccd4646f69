#pragma once

// The command-line frontend: kernels and bounds for any built-in family,
// curve data for the Hoeffding-kernel figures as CSV, the per-family
// bound tables, discrete spectra and the verification suite.  Kept in a
// header so the test suite can drive it in-process.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "steinops/eigenweights.hpp"
#include "steinops/report_json.hpp"
#include "steinops/suite.hpp"

namespace steinops::cli {

/// Shortest round-trip decimal representation.
inline std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

namespace detail {

inline double parse_real(const std::string& tok) {
  // grid bounds allow the "1-x" shorthand for quantiles near one
  if (tok.size() > 2 && tok[0] == '1' && tok[1] == '-') {
    return 1.0 - std::stod(tok.substr(2));
  }
  return std::stod(tok);
}

inline std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_real(tok));
  }
  return out;
}

struct GridSpec {
  double lo_q = 1e-6;
  double hi_q = 1.0 - 1e-6;
  int n = 512;
};

inline GridSpec parse_grid(const std::string& spec) {
  const auto v = parse_list(spec);
  if (v.size() != 3) {
    throw CLI::ValidationError("--grid expects lo-quantile,hi-quantile,n");
  }
  GridSpec g;
  g.lo_q = v[0];
  g.hi_q = v[1];
  g.n = static_cast<int>(v[2]);
  if (g.n < 2) throw CLI::ValidationError("--grid: n-points >= 2 required");
  return g;
}

inline RealFn named_fn(const std::string& name) {
  if (name == "id") return fn::identity();
  if (name == "neg-id") return fn::neg_identity();
  if (name == "square") return fn::square();
  if (name == "cube") {
    return RealFn("cube", [](double x) { return x * x * x; },
                  [](double x) { return 3.0 * x * x; });
  }
  if (name == "exp-neg") return fn::exp_neg();
  if (name == "sin") return fn::sine();
  if (name == "cos") {
    return RealFn("cos", [](double x) { return std::cos(x); },
                  [](double x) { return -std::sin(x); });
  }
  if (name == "tanh") {
    return RealFn("tanh", [](double x) { return std::tanh(x); },
                  [](double x) {
                    const double t = std::tanh(x);
                    return 1.0 - t * t;
                  });
  }
  throw CLI::ValidationError(
      "unknown function name '" + name +
      "' (known: id, neg-id, square, cube, exp-neg, sin, cos, tanh)");
}

/// Writes atomically: temp file in the target directory, then rename.
inline void emit(const std::string& output, const std::string& content) {
  if (output.empty() || output == "-") {
    std::fwrite(content.data(), 1, content.size(), stdout);
    return;
  }
  namespace fs = std::filesystem;
  const fs::path target(output);
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw Error("cannot open output file " + tmp.string());
    os.write(content.data(), static_cast<std::streamsize>(content.size()));
  }
  fs::rename(tmp, target);
}

inline Lattice default_ell(const Distribution& d) {
  return d.discrete ? Lattice::forward : Lattice::continuous;
}

struct CommonOpts {
  std::string family;
  std::string params_csv;
  std::string ell_str;
  std::string grid_str = "1e-6,1-1e-6,512";
  std::string output;
  std::string format;
  std::uint64_t seed = 0;
  bool strict = false;

  void attach(CLI::App* cmd, bool with_family = true) {
    if (with_family) {
      cmd->add_option("--family", family, "family id")->required();
      cmd->add_option("--params", params_csv, "comma-separated parameters")
          ->required();
      cmd->add_option("--ell", ell_str, "lattice: -1, 0 or +1");
    }
    cmd->add_option("--grid", grid_str,
                    "quantile grid: lo-quantile,hi-quantile,n-points");
    cmd->add_option("--output", output, "output path (default stdout)");
    cmd->add_option("--format", format, "csv, json or text");
    cmd->add_option("--seed", seed, "rng seed");
    cmd->add_flag("--strict", strict, "escalate boundary warnings to errors");
  }

  Distribution dist() const { return make_family(family, parse_list(params_csv)); }

  Lattice ell(const Distribution& d) const {
    if (ell_str.empty()) return default_ell(d);
    const Lattice l = lattice_from_ell(std::stoi(ell_str));
    const bool cont = l == Lattice::continuous;
    if (cont == d.discrete) {
      throw CLI::ValidationError("--ell " + ell_str +
                                 " is incompatible with family " + family);
    }
    return l;
  }

  std::string fmt_or(const char* dflt) const {
    return format.empty() ? dflt : format;
  }
};

inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

}  // namespace detail

inline int run_kernel(const detail::CommonOpts& o) {
  const Distribution d = o.dist();
  const Lattice ell = o.ell(d);
  const SteinContext ctx = make_context(d, ell, Tolerance{1e-13, 1e-12});
  const auto gs = detail::parse_grid(o.grid_str);
  const auto grid = quantile_grid(d, gs.lo_q, gs.hi_q, gs.n);
  const auto closed = closed_form_kernel(d, ell);

  const std::string format = o.fmt_or("csv");
  if (format == "json") {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (double x : grid) {
      const double tau = -inverse_apply(ctx, fn::identity(), x);
      nlohmann::ordered_json row{{"x", x}, {"tau", tau}};
      if (closed) {
        row["tau_closed"] = (*closed)(x);
        row["abs_diff"] = std::fabs(tau - (*closed)(x));
      }
      rows.push_back(std::move(row));
    }
    detail::emit(o.output, rows.dump(2) + "\n");
    return 0;
  }
  std::string out = "x,tau,tau_closed,abs_diff\n";
  for (double x : grid) {
    const double tau = -inverse_apply(ctx, fn::identity(), x);
    std::string c3, c4;
    if (closed) {
      c3 = fmt((*closed)(x));
      c4 = fmt(std::fabs(tau - (*closed)(x)));
    }
    out += detail::csv_row({fmt(x), fmt(tau), c3, c4});
  }
  detail::emit(o.output, out);
  return 0;
}

inline int run_curves(const detail::CommonOpts& o,
                      const std::string& xprime_csv) {
  const Distribution d = o.dist();
  const Lattice ell = o.ell(d);
  const SteinContext ctx = make_context(d, ell);
  const auto gs = detail::parse_grid(o.grid_str);
  auto xs = quantile_grid(d, gs.lo_q, gs.hi_q, gs.n);
  std::vector<double> xprimes = detail::parse_list(xprime_csv);
  if (xprimes.empty()) {
    for (double q : {0.1, 0.25, 0.5, 0.75, 0.9}) {
      xprimes.push_back(quantile_of(d, q));
    }
  }
  // the x sweep includes every requested x' so the K(x',x')/p(x') value
  // appears exactly
  for (double xp : xprimes) xs.push_back(xp);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::string out = "x,xprime,k_over_p\n";
  for (double x : xs) {
    const double px = d.density(x);
    for (double xp : xprimes) {
      out += detail::csv_row({fmt(x), fmt(xp), fmt(k_kernel(ctx, x, xp) / px)});
    }
    // the diagonal of the second figure family
    out += detail::csv_row({fmt(x), fmt(x), fmt(k_kernel(ctx, x, x) / px)});
  }
  detail::emit(o.output, out);
  return 0;
}

inline int run_bounds(const detail::CommonOpts& o, const std::string& g_name,
                      const std::string& h_name) {
  const Distribution d = o.dist();
  const Lattice ell = o.ell(d);
  const SteinContext ctx = make_context(d, ell);
  const RealFn g = detail::named_fn(g_name);
  const RealFn h = detail::named_fn(h_name);
  const BoundReport r = variance_sandwich(ctx, g, h, o.strict);
  const std::string format = o.fmt_or("json");
  if (format == "text") {
    std::string out;
    out += "lower    " + fmt(r.lower) + "\n";
    out += "center   " + fmt(r.center) + "\n";
    out += "upper    " + fmt(r.upper) + "\n";
    out += "weight   " + r.weight_provenance + "\n";
    out += "boundary " + r.boundary_status + "\n";
    detail::emit(o.output, out);
  } else {
    detail::emit(o.output, to_json(r).dump(2) + "\n");
  }
  return 0;
}

inline int run_table(const detail::CommonOpts& o) {
  const Distribution d = o.dist();
  std::vector<Lattice> ells =
      d.discrete ? std::vector<Lattice>{Lattice::backward, Lattice::forward}
                 : std::vector<Lattice>{Lattice::continuous};
  const std::vector<std::string> battery = {"id", "square", "exp-neg"};

  std::string out = "family,ell,g,lower,var,upper,weight\n";
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (Lattice ell : ells) {
    const SteinContext ctx = make_context(d, ell);
    for (const auto& gname : battery) {
      BoundReport r;
      try {
        r = variance_sandwich(ctx, detail::named_fn(gname), fn::neg_identity(),
                              o.strict);
      } catch (const Error&) {
        continue;  // not integrable for this family; skip the row
      }
      out += detail::csv_row({o.family, std::to_string(ell_of(ell)), gname,
                              fmt(r.lower), fmt(r.center), fmt(r.upper),
                              r.weight_provenance});
      rows.push_back(nlohmann::ordered_json{{"family", o.family},
                                            {"ell", ell_of(ell)},
                                            {"g", gname},
                                            {"lower", r.lower},
                                            {"var", r.center},
                                            {"upper", r.upper},
                                            {"weight", r.weight_provenance}});
    }
  }
  const std::string format = o.fmt_or("csv");
  detail::emit(o.output,
               format == "json" ? rows.dump(2) + "\n" : out);
  return 0;
}

inline int run_eigen(const detail::CommonOpts& o) {
  const Distribution d = o.dist();
  const Lattice ell = o.ell(d);
  const SteinContext ctx = make_context(d, ell, Tolerance{1e-13, 1e-12});
  const EigenWeightAnalysis ew = eigen_weight_analysis(ctx);

  const std::string format = o.fmt_or("csv");
  if (format == "json") {
    nlohmann::ordered_json modes = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < ew.eigenvalues.size(); ++k) {
      nlohmann::ordered_json m{{"k", k}, {"eigenvalue", ew.eigenvalues[k]}};
      for (std::size_t i = 0; i < ew.mode_index.size(); ++i) {
        if (ew.mode_index[i] == static_cast<int>(k)) {
          m["weight_constant"] = ew.weight_constants[i];
          m["weight_residual"] = ew.weight_residuals[i];
        }
      }
      modes.push_back(std::move(m));
    }
    detail::emit(o.output, modes.dump(2) + "\n");
    return 0;
  }
  std::string out = "k,eigenvalue,weight_constant,weight_residual\n";
  for (std::size_t k = 0; k < ew.eigenvalues.size(); ++k) {
    std::string wc, wr;
    for (std::size_t i = 0; i < ew.mode_index.size(); ++i) {
      if (ew.mode_index[i] == static_cast<int>(k)) {
        wc = fmt(ew.weight_constants[i]);
        wr = fmt(ew.weight_residuals[i]);
      }
    }
    out += detail::csv_row({std::to_string(k), fmt(ew.eigenvalues[k]), wc, wr});
  }
  detail::emit(o.output, out);
  return 0;
}

inline int run_verify(const std::string& scope_csv, std::uint64_t seed,
                      const std::string& output) {
  std::vector<SuiteEntry> scope;
  if (scope_csv.empty() || scope_csv == "all") {
    scope = default_scope();
  } else {
    std::vector<std::string> names;
    std::stringstream ss(scope_csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) names.push_back(tok);
    }
    scope = scope_from_names(names);
  }
  const SuiteReport rep = invariant_suite(scope, seed);
  detail::emit(output, to_json(rep).dump(2) + "\n");
  return rep.all_pass() ? 0 : 1;
}

/// Entry point shared by the binary and the tests.  Returns the process
/// exit code: 0 pass, 1 numeric failure, 2 usage error.
inline int run(int argc, const char* const* argv) {
  CLI::App app{"Stein operator calculus for univariate distributions"};
  app.set_help_flag("--help", "print help and exit");
  app.require_subcommand(1);

  detail::CommonOpts kernel_o, curves_o, bounds_o, table_o, eigen_o;
  std::string xprime_csv, g_name = "square", h_name = "neg-id";
  std::string scope_csv = "all", verify_output;
  std::uint64_t verify_seed = 0;

  auto* kernel = app.add_subcommand("kernel", "Stein kernel vs closed form");
  kernel_o.attach(kernel);
  auto* curves = app.add_subcommand("curves", "Hoeffding kernel curve data");
  curves_o.attach(curves);
  curves->add_option("--xprime", xprime_csv, "comma-separated x' values");
  auto* bounds = app.add_subcommand("bounds", "variance sandwich report");
  bounds_o.attach(bounds);
  bounds->add_option("--g", g_name, "test function g");
  bounds->add_option("--h", h_name, "decreasing weight function h");
  auto* table = app.add_subcommand("table", "family bound table");
  table_o.attach(table);
  auto* eigen = app.add_subcommand("eigen", "spectrum of the difference operator");
  eigen_o.attach(eigen);
  auto* verify = app.add_subcommand("verify", "run the invariant suite");
  verify->add_option("--scope", scope_csv, "all or comma-separated family ids");
  verify->add_option("--seed", verify_seed, "rng seed");
  verify->add_option("--output", verify_output, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (kernel->parsed()) return run_kernel(kernel_o);
    if (curves->parsed()) return run_curves(curves_o, xprime_csv);
    if (bounds->parsed()) return run_bounds(bounds_o, g_name, h_name);
    if (table->parsed()) return run_table(table_o);
    if (eigen->parsed()) return run_eigen(eigen_o);
    if (verify->parsed()) return run_verify(scope_csv, verify_seed, verify_output);
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const InvalidParameter& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace steinops::cli
