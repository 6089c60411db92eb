#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>
#include <string_view>

#include "pnpgl/equilibrium.hpp"
#include "pnpgl/error.hpp"
#include "pnpgl/experiments.hpp"
#include "pnpgl/io.hpp"
#include "pnpgl/kernels.hpp"
#include "pnpgl/pnp_admm.hpp"
#include "pnpgl/rng.hpp"
#include "pnpgl/table.hpp"

namespace pnpgl::cli {

namespace fs = std::filesystem;

namespace {

enum class Kind { integer, real, text };

struct Key {
  std::string name;
  Kind kind;
  std::string help;
};

// Settings every subcommand accepts.
const std::vector<Key>& common_keys() {
  static const std::vector<Key> keys = {
      {"seed", Kind::integer, "RNG seed"},
      {"n", Kind::integer, "signal length (inpaint: side of the square crop)"},
      {"h", Kind::real, "kernel bandwidth (multi-prior: largest of the five bandwidths)"},
      {"patch", Kind::integer, "patch size, odd"},
      {"alpha", Kind::real, "regularization weight"},
      {"sigma-eta", Kind::real, "observation noise standard deviation"},
      {"spatial-sigma", Kind::real, "width of the spatial kernel factor, 0 for none"},
      {"search-radius", Kind::integer, "largest patch offset compared, 0 for dense"},
  };
  return keys;
}

struct Command {
  std::string name;
  std::string summary;
  std::vector<Key> extra;
};

const std::vector<Command>& commands() {
  static const std::vector<Command> cmds = {
      {"rho-sweep", "MSE of both estimators over a log grid of alpha (oracle W)", {}},
      {"projection", "|U^T x| and |U^T y| per eigenmode of the oracle W", {}},
      {"eigvals", "eigenvalues of the oracle W and both estimator gains", {}},
      {"bias-var", "per-mode MSE, squared bias and variance of both estimators", {}},
      {"prefilter", "MSE of both estimators when W is built from x plus noise", {}},
      {"multi-prior",
       "consensus equilibrium with five filters of graded bandwidth",
       {{"rho", Kind::real, "strength of the data agent"},
        {"mu0", Kind::real, "weight of the data agent"}}},
      {"inpaint",
       "inpainting PSNR of Shepard, Laplacian and PnP on the test image",
       {{"image", Kind::text, "PGM image (default: bundled image)"}}},
      {"admm-run",
       "run PnP ADMM and compare with the closed-form equilibrium",
       {{"rho", Kind::real, "ADMM penalty"},
        {"rate", Kind::real, "sampling rate, 1 for denoising"},
        {"max-iters", Kind::integer, "iteration cap"},
        {"tol", Kind::real, "stopping tolerance on the change of x and on ||x - v||"}}},
      {"build-filter",
       "build W and write its entries and spectrum",
       {{"image", Kind::text, "PGM image to build from (default: 1D test signal)"},
        {"source", Kind::text, "clean or noisy"}}},
  };
  return cmds;
}

const Command& find_command(const std::string& name) {
  for (const auto& c : commands())
    if (c.name == name) return c;
  throw InvalidArgument("unknown command '" + name + "'");
}

std::vector<Key> keys_for(const Command& cmd) {
  std::vector<Key> keys = common_keys();
  keys.insert(keys.end(), cmd.extra.begin(), cmd.extra.end());
  return keys;
}

std::string fmt_size(std::size_t v) { return std::to_string(v); }

// Default settings, formatted the same way as resolved ones.
std::map<std::string, std::string> defaults_for(const std::string& cmd) {
  std::map<std::string, std::string> d;
  auto put_kernel = [&](const KernelConfig& k) {
    d["h"] = format_double(k.h);
    d["patch"] = fmt_size(k.patch_size);
    d["spatial-sigma"] = format_double(k.spatial_sigma.value_or(0.0));
    d["search-radius"] = fmt_size(k.search_radius.value_or(0));
  };
  const EstimatorConfig est;
  d["alpha"] = format_double(est.alpha);
  d["sigma-eta"] = format_double(est.sigma_eta);
  d["seed"] = "1";

  if (cmd == "admm-run") {
    KernelConfig k = KernelConfig::defaults_1d();
    k.spatial_sigma = 4.0;
    put_kernel(k);
    const AdmmProblem pb;
    d["n"] = "64";
    d["rho"] = format_double(pb.rho);
    d["rate"] = "1";
    // Masked problems contract slowly; denoising runs stop far earlier.
    d["max-iters"] = "100000";
    d["tol"] = format_double(pb.tol);
    return d;
  }
  if (cmd == "build-filter") {
    put_kernel(KernelConfig::defaults_1d());
    d["n"] = "256";
    d["image"] = "";
    d["source"] = "clean";
    return d;
  }
  const ExperimentSpec spec = ExperimentSpec::defaults(cmd);
  d["seed"] = std::to_string(spec.seed);
  d["alpha"] = format_double(spec.estimator.alpha);
  d["sigma-eta"] = format_double(spec.estimator.sigma_eta);
  if (cmd == "inpaint") {
    put_kernel(spec.image_kernel);
    d["n"] = fmt_size(spec.image_size);
    d["image"] = "";
  } else {
    put_kernel(spec.kernel);
    d["n"] = fmt_size(spec.n);
  }
  if (cmd == "multi-prior") {
    d["h"] = format_double(*std::max_element(spec.filter_h.begin(), spec.filter_h.end()));
    d["rho"] = format_double(spec.ce_alpha);
    d["mu0"] = format_double(spec.mu0);
  }
  return d;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

// Typed view over the resolved key=value settings.
class Settings {
 public:
  Settings(std::vector<Key> keys, std::map<std::string, std::string> raw)
      : keys_(std::move(keys)) {
    for (const auto& key : keys_) {
      const std::string& v = raw.at(key.name);
      switch (key.kind) {
        case Kind::integer: values_[key.name] = std::to_string(parse_integer(key.name, v)); break;
        case Kind::real: values_[key.name] = format_double(parse_real(key.name, v)); break;
        case Kind::text: values_[key.name] = v; break;
      }
    }
  }

  std::uint64_t integer(const std::string& k) const { return parse_integer(k, values_.at(k)); }
  std::size_t size(const std::string& k) const { return static_cast<std::size_t>(integer(k)); }
  double real(const std::string& k) const { return parse_real(k, values_.at(k)); }
  const std::string& text(const std::string& k) const { return values_.at(k); }
  const std::vector<Key>& keys() const { return keys_; }

  KernelConfig kernel() const {
    KernelConfig k;
    k.h = real("h");
    k.patch_size = size("patch");
    if (const double s = real("spatial-sigma"); s > 0.0) k.spatial_sigma = s;
    if (const std::size_t r = size("search-radius"); r > 0) k.search_radius = r;
    k.validate();
    return k;
  }

  EstimatorConfig estimator() const {
    EstimatorConfig e{real("alpha"), real("sigma-eta")};
    e.validate();
    return e;
  }

 private:
  static std::uint64_t parse_integer(const std::string& k, const std::string& v) {
    std::uint64_t out = 0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty())
      throw InvalidArgument("--" + k + ": expected a non-negative integer, got '" + v + "'");
    return out;
  }
  static double parse_real(const std::string& k, const std::string& v) {
    double out = 0.0;
    const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || p != v.data() + v.size() || v.empty() || !std::isfinite(out))
      throw InvalidArgument("--" + k + ": expected a finite number, got '" + v + "'");
    return out;
  }

  std::vector<Key> keys_;
  std::map<std::string, std::string> values_;
};

struct RunContext {
  fs::path out_dir;
  std::vector<std::string> outputs;
  std::ostream& out;

  void write(const std::string& name, std::string_view bytes) {
    write_file_atomic(out_dir / name, bytes);
    outputs.push_back(name);
    out << "wrote " << (out_dir / name).string() << '\n';
  }
  void write_table(const std::string& name, const Table& t) { write(name, t.to_csv()); }
};

ExperimentSpec experiment_spec(const std::string& cmd, const Settings& s) {
  ExperimentSpec spec = ExperimentSpec::defaults(cmd);
  spec.seed = s.integer("seed");
  spec.estimator = s.estimator();
  if (cmd == "inpaint") {
    spec.image_kernel = s.kernel();
    spec.image_size = s.size("n");
    if (!s.text("image").empty()) spec.image = fs::path(s.text("image"));
    return spec;
  }
  spec.n = s.size("n");
  spec.kernel = s.kernel();
  if (cmd == "multi-prior") {
    const Vector base = spec.filter_h;
    const double top = *std::max_element(base.begin(), base.end());
    for (std::size_t i = 0; i < base.size(); ++i) spec.filter_h[i] = base[i] / top * spec.kernel.h;
    spec.ce_alpha = s.real("rho");
    spec.mu0 = s.real("mu0");
  }
  return spec;
}

void run_experiment_command(const std::string& cmd, const Settings& s, RunContext& ctx) {
  const ExperimentSpec spec = experiment_spec(cmd, s);
  if (cmd == "multi-prior") {
    CEReport combined;
    ctx.write_table(cmd + ".csv", run_multi_prior(spec, &combined));
    ctx.write_table(cmd + "-residuals.csv", ce_report_table(combined));
    return;
  }
  const Table t = run_experiment(spec);
  ctx.write_table(cmd + ".csv", t);
  if (cmd == "inpaint") {
    const Signal truth = load_inpaint_image(spec);
    const fs::path tmp = ctx.out_dir / "inpaint-truth.pgm.part";
    write_pgm(tmp, truth);
    fs::rename(tmp, ctx.out_dir / "inpaint-truth.pgm");
    ctx.outputs.push_back("inpaint-truth.pgm");
  }
}

void run_admm_command(const Settings& s, RunContext& ctx) {
  const std::size_t n = s.size("n");
  const std::uint64_t seed = s.integer("seed");
  const double rate = s.real("rate");
  if (!(rate > 0.0 && rate <= 1.0)) throw InvalidArgument("--rate must lie in (0, 1]");

  const Signal x = make_signal_1d(n, seed);
  const Signal noisy = add_noise(x, {s.real("sigma-eta"), derive_seed(seed, 1)});
  const ForwardModel forward =
      rate < 1.0 ? random_sampling_mask(n, rate, derive_seed(seed, 100)) : ForwardModel::identity(n);

  AdmmProblem pb;
  pb.forward = forward;
  pb.y = apply_forward(forward, noisy);
  pb.rho = s.real("rho");
  pb.filter = std::make_shared<const GraphFilter>(build_filter(x, s.kernel(), Provenance::oracle));
  pb.max_iters = static_cast<int>(s.integer("max-iters"));
  pb.tol = s.real("tol");

  const AdmmState st = run(pb);
  const Signal closed = solve_general_linear_ce(forward, pb.y, *pb.filter, pb.rho);
  const double fixed_point = distance(st.x, closed.values());
  const CeResiduals ce = ce_residuals(st, pb);

  Table hist{{"iter", "primal_residual", "change"}, {}};
  for (std::size_t k = 0; k < st.change.size(); ++k)
    hist.add_row({static_cast<double>(k + 1), st.primal_residual[k], st.change[k]});
  ctx.write_table("admm-history.csv", hist);

  Table sol{{"i", "x", "v", "closed_form"}, {}};
  for (std::size_t i = 0; i < n; ++i)
    sol.add_row({static_cast<double>(i), st.x[i], st.v[i], closed[i]});
  ctx.write_table("admm-solution.csv", sol);

  ctx.out << "iterations: " << st.k << (st.converged ? " (converged)" : " (not converged)") << '\n'
          << "ce residuals: data " << format_double(ce.data_agent) << ", prior "
          << format_double(ce.prior_agent) << '\n'
          << "fixed-point residual: " << format_double(fixed_point) << '\n';
  if (!st.converged)
    throw NumericalError("admm-convergence", "ADMM did not converge within " +
                                                 std::to_string(pb.max_iters) + " iterations");
}

void run_build_filter_command(const Settings& s, RunContext& ctx) {
  const std::uint64_t seed = s.integer("seed");
  const std::string& source = s.text("source");
  if (source != "clean" && source != "noisy")
    throw InvalidArgument("--source must be 'clean' or 'noisy'");
  const Signal clean =
      s.text("image").empty() ? make_signal_1d(s.size("n"), seed) : read_pgm(s.text("image"));
  const bool noisy = source == "noisy";
  const Signal base = noisy ? add_noise(clean, {s.real("sigma-eta"), derive_seed(seed, 1)}) : clean;
  const GraphFilter w =
      build_filter(base, s.kernel(), noisy ? Provenance::pre_filtered : Provenance::oracle);

  Table entries{{"i", "j", "w"}, {}};
  for (std::size_t i = 0; i < w.size(); ++i)
    for (std::size_t j = 0; j < w.size(); ++j)
      if (w.matrix()(i, j) != 0.0)
        entries.add_row({static_cast<double>(i), static_cast<double>(j), w.matrix()(i, j)});
  ctx.write_table("filter.csv", entries);

  Table spec{{"i", "s"}, {}};
  for (std::size_t i = 0; i < w.size(); ++i)
    spec.add_row({static_cast<double>(i + 1), w.spectrum().s[i]});
  ctx.write_table("spectrum.csv", spec);
  ctx.out << "provenance: " << to_string(w.provenance()) << ", n = " << w.size()
          << ", min eigenvalue " << format_double(w.min_eig()) << '\n';
}

std::string read_text_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Parsed {
  std::string command;
  std::map<std::string, std::string> flags;
  std::optional<std::string> config_path;
  std::optional<std::string> out_dir;
};

std::unique_ptr<CLI::App> make_app(Parsed& parsed) {
  auto app = std::make_unique<CLI::App>("Graph-filter PnP analysis experiments", "pnpgl");
  app->set_help_flag("--help", "print this help and exit");
  app->require_subcommand(1);
  app->set_version_flag("--version", kVersion);
  for (const auto& cmd : commands()) {
    CLI::App* sub = app->add_subcommand(cmd.name, cmd.summary);
    sub->callback([&parsed, name = cmd.name] { parsed.command = name; });
    sub->add_option_function<std::string>(
        "--out", [&parsed](const std::string& v) { parsed.out_dir = v; },
        "output directory (default: current directory)");
    sub->add_option_function<std::string>(
        "--config", [&parsed](const std::string& v) { parsed.config_path = v; },
        "key=value settings file; flags override it");
    for (const auto& key : keys_for(cmd)) {
      sub->add_option_function<std::string>(
          "--" + key.name, [&parsed, k = key.name](const std::string& v) { parsed.flags[k] = v; },
          key.help);
    }
  }
  return app;
}

std::string now_string(std::chrono::steady_clock::duration d) {
  return format_double(std::chrono::duration<double>(d).count());
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos)
      throw ParseError("config line " + std::to_string(lineno) + ": expected key=value");
    std::string key = trim(std::string_view(body).substr(0, eq));
    std::string value = trim(std::string_view(body).substr(eq + 1));
    if (key.empty()) throw ParseError("config line " + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second)
      throw ParseError("config line " + std::to_string(lineno) + ": repeated key '" + key + "'");
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> parse_manifest(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    out.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return out;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  kernels::configure_threads_from_env();
  Parsed parsed;
  auto app = make_app(parsed);
  if (args.empty()) {
    err << app->help();
    return 1;
  }
  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app->parse(std::move(reversed));
  } catch (const CLI::CallForHelp& e) {
    out << app->help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app->help();
    return 1;
  }

  const auto start = std::chrono::steady_clock::now();
  try {
    const Command& cmd = find_command(parsed.command);
    const std::vector<Key> keys = keys_for(cmd);
    std::map<std::string, std::string> raw = defaults_for(cmd.name);

    std::string out_dir = ".";
    if (parsed.config_path) {
      for (auto& [k, v] : parse_config_text(read_text_file(*parsed.config_path))) {
        if (k == "out")
          out_dir = v;
        else if (raw.count(k) == 0U)
          throw InvalidArgument("config: unknown key '" + k + "' for " + cmd.name);
        else
          raw[k] = v;
      }
    }
    for (const auto& [k, v] : parsed.flags) raw[k] = v;
    if (parsed.out_dir) out_dir = *parsed.out_dir;

    std::string source = parsed.config_path ? "file:" + *parsed.config_path : "";
    if (!parsed.flags.empty()) source += source.empty() ? "flags" : "+flags";
    if (source.empty()) source = "defaults";

    const Settings settings(keys, raw);
    fs::create_directories(out_dir);
    RunContext ctx{out_dir, {}, out};

    std::optional<NumericalError> deferred;
    try {
      if (cmd.name == "admm-run")
        run_admm_command(settings, ctx);
      else if (cmd.name == "build-filter")
        run_build_filter_command(settings, ctx);
      else
        run_experiment_command(cmd.name, settings, ctx);
    } catch (const NumericalError& e) {
      if (ctx.outputs.empty()) throw;
      deferred = e;  // outputs exist, so record them before failing
    }

    std::ostringstream m;
    m << "command=" << cmd.name << '\n' << "version=" << kVersion << '\n';
#ifdef __VERSION__
    m << "compiler=" << __VERSION__ << '\n';
#endif
    m << "seed=" << settings.text("seed") << '\n';
    for (const auto& key : keys)
      if (key.name != "seed") m << "config." << key.name << '=' << settings.text(key.name) << '\n';
    m << "threads=" << kernels::thread_count() << '\n';
    std::string joined;
    for (const auto& o : ctx.outputs) joined += (joined.empty() ? "" : ",") + o;
    m << "outputs=" << joined << '\n';
    m << "wall_time_s=" << now_string(std::chrono::steady_clock::now() - start) << '\n';
    m << "config_source=" << source << '\n';
    write_file_atomic(fs::path(out_dir) / "manifest.txt", m.str());
    if (deferred) throw *deferred;
    return 0;
  } catch (const NumericalError& e) {
    err << "numerical failure [" << e.invariant() << "]: " << e.what() << '\n';
    return 2;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pnpgl::cli
