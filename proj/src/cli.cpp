#include "synthfid/cli.hpp"

#include "synthfid/benchfns.hpp"
#include "synthfid/corrbounds.hpp"
#include "synthfid/errors.hpp"
#include "synthfid/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <istream>
#include <memory>
#include <ostream>
#include <sstream>

namespace synthfid::cli {
namespace {

using nlohmann::json;

std::string mode_name(CorrelationMode m) {
  switch (m) {
    case CorrelationMode::Interactive:
      return "interactive";
    case CorrelationMode::Explicit:
      return "explicit";
    case CorrelationMode::Random:
      return "random";
  }
  return "unknown";
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream is(text);
  std::string field;
  while (std::getline(is, field, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(field, &used));
      if (field.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      throw InvalidDataError("invalid correlation value '" + field + "'");
    }
  }
  if (out.empty()) throw InvalidDataError("empty correlation list");
  return out;
}

std::string fmt6(double v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(6) << v;
  return os.str();
}

/// Basis column names: fidelity labels followed by the prior draw.
std::string column_name(const FidelityDataset& data, Eigen::Index i) {
  if (i < data.num_fidelities()) return data.labels[static_cast<std::size_t>(i)];
  return "prior_draw";
}

FidelityDataset with_synthetic(const FidelityDataset& data, const VectorXd& values) {
  MatrixXd y(data.num_points(), data.num_fidelities() + 1);
  y.leftCols(data.num_fidelities()) = data.y;
  y.col(data.num_fidelities()) = values;
  auto labels = data.labels;
  std::string name = "synthetic";
  while (std::find(labels.begin(), labels.end(), name) != labels.end()) name += "_";
  labels.push_back(name);
  return FidelityDataset(data.x, std::move(y), std::move(labels), data.source);
}

void print_sample_summary(std::ostream& out, const SyntheticSample& s, const FidelityDataset& data) {
  out << "  seed " << s.seed << "\n";
  for (Eigen::Index i = 0; i < s.requested.size(); ++i) {
    out << "    " << std::left << std::setw(12) << column_name(data, i) << " requested "
        << std::setw(10) << fmt6(s.requested(i)) << " achieved " << fmt6(s.achieved(i)) << "\n";
  }
  out << "    heuristic variance " << format_double(s.heuristic_variance) << ", realized variance "
      << format_double(s.realized_variance) << "\n";
}

CorrelationSpec interactive_spec(BoundsSession session, const FidelityDataset& data, Streams& io) {
  while (!session.complete()) {
    const Interval iv = session.bounds_for_next();
    const Eigen::Index i = session.cursor();
    if (session.next_is_final()) {
      io.out << "correlation to " << column_name(data, i) << ": enter 'l' for " << fmt6(iv.lower)
             << " or 'u' for " << fmt6(iv.upper) << ": " << std::flush;
    } else {
      io.out << "correlation to " << column_name(data, i) << " in [" << fmt6(iv.lower) << ", "
             << fmt6(iv.upper) << "]: " << std::flush;
    }
    std::string line;
    if (!std::getline(io.in, line)) throw InvalidDataError("input ended before every correlation was chosen");
    const auto b = line.find_first_not_of(" \t\r");
    line = b == std::string::npos ? "" : line.substr(b, line.find_last_not_of(" \t\r") - b + 1);
    try {
      if (session.next_is_final()) {
        if (line == "l" || line == "u") {
          session.choose_endpoint(line == "l" ? BoundsSession::Endpoint::Lower
                                              : BoundsSession::Endpoint::Upper);
          continue;
        }
        const double v = parse_list(line).at(0);
        if (std::abs(v - iv.upper) <= 1e-6) {
          session.choose_endpoint(BoundsSession::Endpoint::Upper);
        } else if (std::abs(v - iv.lower) <= 1e-6) {
          session.choose_endpoint(BoundsSession::Endpoint::Lower);
        } else {
          io.out << "value must be one of the two endpoints\n";
        }
        continue;
      }
      const auto values = parse_list(line);
      if (values.size() != 1) throw InvalidDataError("enter a single value");
      session.choose(values.front());
    } catch (const RangeError& e) {
      io.out << "out of range: " << e.what() << "\n";
    } catch (const InvalidDataError& e) {
      io.out << e.what() << "\n";
    }
  }
  return session.finalize();
}

std::unique_ptr<MogpModel> load_model(const std::string& path, FitConfig* config = nullptr) {
  const json j = read_json_file(path);
  if (config) *config = model_config_from_json(j);
  return std::make_unique<MogpModel>(model_from_json(j));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidDataError("cannot write '" + path + "'");
  out << text;
}

/// x columns, every fidelity, latent posterior mean/sd per fidelity and
/// each synthetic sample, one row per training point.
std::string plot_data(const MogpModel& model, const std::vector<SyntheticSample>& samples) {
  const auto& data = model.data();
  const auto post = posterior(model, data.x);
  std::ostringstream os;
  for (Eigen::Index d = 0; d < data.num_dims(); ++d) os << 'x' << d << ',';
  for (Eigen::Index k = 0; k < data.num_fidelities(); ++k) os << data.labels[static_cast<std::size_t>(k)] << ',';
  for (Eigen::Index k = 0; k < data.num_fidelities(); ++k) {
    const auto& l = data.labels[static_cast<std::size_t>(k)];
    os << "mean_" << l << ",sd_" << l << ',';
  }
  for (std::size_t s = 0; s < samples.size(); ++s) {
    os << "synthetic_" << s << (s + 1 == samples.size() ? "" : ",");
  }
  os << '\n';
  for (Eigen::Index i = 0; i < data.num_points(); ++i) {
    for (Eigen::Index d = 0; d < data.num_dims(); ++d) os << format_double(data.x(i, d)) << ',';
    for (Eigen::Index k = 0; k < data.num_fidelities(); ++k) os << format_double(data.y(i, k)) << ',';
    for (Eigen::Index k = 0; k < data.num_fidelities(); ++k) {
      const auto& p = post[static_cast<std::size_t>(k)];
      os << format_double(p.mean(i)) << ',' << format_double(std::sqrt(std::max(0.0, p.covariance(i, i))))
         << ',';
    }
    for (std::size_t s = 0; s < samples.size(); ++s) {
      os << format_double(samples[s].values(i)) << (s + 1 == samples.size() ? "" : ",");
    }
    os << '\n';
  }
  return os.str();
}

struct FitOptions {
  std::string kernel = "sm";
  std::string noise = "shared";
  double noise_value = 0.0;
  int mixtures = 4;
  int restarts = 8;
  int max_iterations = 200;
  int threads = 0;

  void attach(CLI::App* app) {
    app->add_option("--kernel", kernel, "intra-fidelity kernel")
        ->check(CLI::IsMember({"sm", "spectral_mixture", "rbf"}))
        ->capture_default_str();
    app->add_option("--mixtures", mixtures, "spectral mixture components (Q)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--restarts", restarts, "optimizer restarts")->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--max-iter", max_iterations, "iterations per restart")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--noise", noise, "noise handling")
        ->check(CLI::IsMember({"shared", "per-fidelity", "fixed"}))
        ->capture_default_str();
    app->add_option("--noise-value", noise_value, "noise variance when --noise fixed")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--threads", threads, "worker threads for restarts (0 = all cores)")
        ->check(CLI::NonNegativeNumber);
  }

  FitConfig config(std::uint64_t seed) const {
    FitConfig c;
    c.kernel = kernel_kind_from_string(kernel);
    c.mixtures = mixtures;
    c.restarts = restarts;
    c.max_iterations = max_iterations;
    c.seed = seed;
    c.noise = noise == "shared" ? NoiseMode::Shared
                                : noise == "per-fidelity" ? NoiseMode::PerFidelity : NoiseMode::Fixed;
    c.fixed_noise = noise_value;
    c.threads = threads;
    return c;
  }
};

}  // namespace

json RunConfig::to_json() const {
  return {{"fit", fit_config_to_json(fit)},
          {"prior_draw", synthfid::to_string(prior_draw)},
          {"correlation_mode", mode_name(correlation_mode)},
          {"correlations", correlations},
          {"samples", samples},
          {"seed", seed},
          {"output", output}};
}

std::uint64_t seed_from_environment() {
  const char* env = std::getenv("SYNTHFID_SEED");
  if (!env || !*env) return 0;
  try {
    return std::stoull(env);
  } catch (const std::exception&) {
    return 0;
  }
}

int run(const std::vector<std::string>& args, Streams io, std::uint64_t default_seed) {
  CLI::App app{"Synthetic fidelity generator for multi-fidelity benchmarks", "synthfid"};
  app.require_subcommand(1);
  std::uint64_t seed = default_seed;
  app.add_option("--seed", seed, "random seed (default: SYNTHFID_SEED or 0)");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check a dataset file");
  std::string validate_path;
  validate_cmd->add_option("data", validate_path, "dataset CSV")->required();

  // fit
  auto* fit_cmd = app.add_subcommand("fit", "fit the multi-output GP to a dataset");
  std::string fit_data, fit_output;
  FitOptions fit_opts;
  fit_cmd->add_option("data", fit_data, "dataset CSV")->required();
  fit_cmd->add_option("-o,--output", fit_output, "model archive (JSON)")->required();
  fit_opts.attach(fit_cmd);

  // correlation options shared by sample and bench
  std::string correlations_text;
  std::string prior_draw = "matrix";

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "draw synthetic fidelities from a fitted model");
  std::string sample_model, sample_output;
  int random_count = 0;
  bool interactive = false;
  sample_cmd->add_option("model", sample_model, "model archive")->required();
  sample_cmd->add_option("-o,--output", sample_output, "output prefix")->required();
  auto* corr_opt = sample_cmd->add_option("--correlations", correlations_text,
                                          "comma-separated Pearson correlations, in basis order");
  auto* random_opt = sample_cmd->add_option("--random", random_count, "number of random correlation specs")
                         ->check(CLI::PositiveNumber);
  auto* inter_opt = sample_cmd->add_flag("--interactive", interactive, "prompt for each correlation");
  corr_opt->excludes(random_opt)->excludes(inter_opt);
  random_opt->excludes(inter_opt);
  sample_cmd->add_option("--prior-draw", prior_draw, "prior draw construction")
      ->check(CLI::IsMember({"matrix", "cholesky"}));

  // bounds
  auto* bounds_cmd = app.add_subcommand("bounds", "print the live bounds for a partial correlation spec");
  std::string bounds_model, partial_text;
  bounds_cmd->add_option("model", bounds_model, "model archive")->required();
  bounds_cmd->add_option("--partial", partial_text, "comma-separated correlations chosen so far");
  bounds_cmd->add_option("--prior-draw", prior_draw, "prior draw construction")
      ->check(CLI::IsMember({"matrix", "cholesky"}));

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "grid a benchmark pair, fit, and draw synthetic samples");
  std::string bench_name, bench_dir = ".";
  int points = 0;
  int bench_samples = 6;
  FitOptions bench_opts;
  bench_cmd->add_option("benchmark", bench_name, "liu | currin")->required();
  bench_cmd->add_option("--points", points, "grid points per dimension (default liu 50, currin 20)")
      ->check(CLI::Range(2, 100000));
  bench_cmd->add_option("--correlations", correlations_text, "one explicit correlation spec");
  bench_cmd->add_option("--samples", bench_samples, "number of samples when no explicit spec is given")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  bench_cmd->add_option("--output-dir", bench_dir, "directory for all outputs");
  bench_cmd->add_option("--prior-draw", prior_draw, "prior draw construction")
      ->check(CLI::IsMember({"matrix", "cholesky"}));
  bench_opts.attach(bench_cmd);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    io.out << app.help();
    return kSuccess;
  } catch (const CLI::CallForAllHelp&) {
    io.out << app.help("", CLI::AppFormatMode::All);
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    io.err << "error: " << e.what() << "\n" << app.help();
    return kUsage;
  }

  try {
    const PriorDrawMode draw_mode = prior_draw_mode_from_string(prior_draw);

    if (*validate_cmd) {
      const FidelityDataset data = read_dataset_file(validate_path);
      io.out << "ok: " << data.num_points() << " points, " << data.num_dims() << " dimensions, "
             << data.num_fidelities() << " fidelities\n";
      return kSuccess;
    }

    if (*fit_cmd) {
      auto data = std::make_shared<const FidelityDataset>(read_dataset_file(fit_data));
      const FitConfig config = fit_opts.config(seed);
      const MogpModel model = fit(data, config);
      write_json_file(fit_output, model_to_json(model, config));
      io.out << "log marginal likelihood: " << format_double(model.diagnostics().log_marginal_likelihood)
             << "\n";
      return kSuccess;
    }

    if (*bounds_cmd) {
      const auto model = load_model(bounds_model);
      const SampleBasis basis = build_basis(*model, seed, draw_mode);
      BoundsSession session = BoundsSession::begin(basis.correlation);
      if (!partial_text.empty()) {
        for (double v : parse_list(partial_text)) {
          if (session.complete()) throw InvalidDataError("too many partial values");
          session.choose(v);
        }
      }
      if (session.complete()) {
        io.out << "complete\n";
        return kSuccess;
      }
      const Interval iv = session.bounds_for_next();
      io.out << "entry " << session.cursor() << " (" << column_name(model->data(), session.cursor())
             << "): [" << fmt6(iv.lower) << ", " << fmt6(iv.upper) << "]"
             << (session.next_is_final() ? " endpoints only" : "") << "\n";
      return kSuccess;
    }

    if (*sample_cmd) {
      FitConfig fit_config;
      const auto model = load_model(sample_model, &fit_config);
      RunConfig run_config;
      run_config.fit = fit_config;
      run_config.prior_draw = draw_mode;
      run_config.seed = seed;
      run_config.output = sample_output;
      DrawOptions options;
      options.mode = draw_mode;

      if (interactive) {
        if (!io.input_is_tty) {
          io.err << "error: interactive mode needs a terminal; use --correlations or --random\n";
          return kUsage;
        }
        run_config.correlation_mode = CorrelationMode::Interactive;
        const SampleBasis basis = build_basis(*model, seed, draw_mode);
        const CorrelationSpec spec =
            interactive_spec(BoundsSession::begin(basis.correlation), model->data(), io);
        const SyntheticSample s = draw(*model, basis, spec, options);
        run_config.correlations.assign(spec.values.data(), spec.values.data() + spec.values.size());
        json report = sample_report(s, model->data());
        report["run_config"] = run_config.to_json();
        write_dataset_file(sample_output + ".csv", with_synthetic(model->data(), s.values));
        write_json_file(sample_output + "_report.json", report);
        print_sample_summary(io.out, s, model->data());
        return kSuccess;
      }

      if (!correlations_text.empty()) {
        run_config.correlation_mode = CorrelationMode::Explicit;
        run_config.correlations = parse_list(correlations_text);
        const SampleBasis basis = build_basis(*model, seed, draw_mode);
        const CorrelationSpec spec =
            complete_with_values(BoundsSession::begin(basis.correlation), run_config.correlations);
        const SyntheticSample s = draw(*model, basis, spec, options);
        json report = sample_report(s, model->data());
        report["run_config"] = run_config.to_json();
        write_dataset_file(sample_output + ".csv", with_synthetic(model->data(), s.values));
        write_json_file(sample_output + "_report.json", report);
        print_sample_summary(io.out, s, model->data());
        return kSuccess;
      }

      run_config.correlation_mode = CorrelationMode::Random;
      run_config.samples = random_count > 0 ? random_count : 1;
      for (int k = 0; k < run_config.samples; ++k) {
        const auto basis_seed = derive_seed(seed, static_cast<std::uint64_t>(2 * k));
        const auto spec_seed = derive_seed(seed, static_cast<std::uint64_t>(2 * k + 1));
        const SampleBasis basis = build_basis(*model, basis_seed, draw_mode);
        const CorrelationSpec spec = sample_random(BoundsSession::begin(basis.correlation), spec_seed);
        const SyntheticSample s = draw(*model, basis, spec, options);
        json report = sample_report(s, model->data());
        report["run_config"] = run_config.to_json();
        report["sample_index"] = k;
        const std::string prefix = sample_output + "_" + std::to_string(k);
        write_dataset_file(prefix + ".csv", with_synthetic(model->data(), s.values));
        write_json_file(prefix + "_report.json", report);
        print_sample_summary(io.out, s, model->data());
      }
      return kSuccess;
    }

    if (*bench_cmd) {
      const BenchmarkPair& pair = benchmark(bench_name);
      if (points == 0) points = pair.dims == 1 ? 50 : 20;
      std::filesystem::create_directories(bench_dir);
      const std::filesystem::path dir(bench_dir);

      auto data = std::make_shared<const FidelityDataset>(grid(pair, points));
      write_dataset_file((dir / "dataset.csv").string(), *data);

      RunConfig run_config;
      run_config.fit = bench_opts.config(seed);
      run_config.prior_draw = draw_mode;
      run_config.seed = seed;
      run_config.output = bench_dir;
      const MogpModel model = fit(data, run_config.fit);
      write_json_file((dir / "model.json").string(), model_to_json(model, run_config.fit));
      io.out << pair.name << ": " << data->num_points() << " points, log marginal likelihood "
             << format_double(model.diagnostics().log_marginal_likelihood) << "\n";

      DrawOptions options;
      options.mode = draw_mode;
      std::vector<SyntheticSample> samples;
      if (!correlations_text.empty()) {
        run_config.correlation_mode = CorrelationMode::Explicit;
        run_config.correlations = parse_list(correlations_text);
        run_config.samples = 1;
        const SampleBasis basis = build_basis(model, seed, draw_mode);
        samples.push_back(draw(
            model, basis,
            complete_with_values(BoundsSession::begin(basis.correlation), run_config.correlations),
            options));
      } else {
        // spread the ground-truth correlation over the samples, remaining
        // entries random within their bounds
        run_config.correlation_mode = CorrelationMode::Random;
        run_config.samples = bench_samples;
        for (int k = 0; k < bench_samples; ++k) {
          const double target =
              bench_samples == 1 ? 0.9 : 0.99 - 0.99 * static_cast<double>(k) / (bench_samples - 1);
          const SampleBasis basis =
              build_basis(model, derive_seed(seed, static_cast<std::uint64_t>(2 * k)), draw_mode);
          BoundsSession session = BoundsSession::begin(basis.correlation);
          const Interval iv = session.bounds_for_next();
          session.choose(std::clamp(target, iv.lower, iv.upper));
          samples.push_back(draw(
              model, basis, sample_random(session, derive_seed(seed, static_cast<std::uint64_t>(2 * k + 1))),
              options));
        }
      }
      for (std::size_t k = 0; k < samples.size(); ++k) {
        const auto& s = samples[k];
        json report = sample_report(s, *data);
        report["run_config"] = run_config.to_json();
        report["sample_index"] = k;
        write_dataset_file((dir / ("sample_" + std::to_string(k) + ".csv")).string(),
                           with_synthetic(*data, s.values));
        write_json_file((dir / ("report_" + std::to_string(k) + ".json")).string(), report);
        io.out << "sample " << k << ":\n";
        print_sample_summary(io.out, s, *data);
      }
      write_text((dir / "plot_data.csv").string(), plot_data(model, samples));
      return kSuccess;
    }
  } catch (const ParseError& e) {
    io.err << "parse error: " << e.what() << "\n";
    return kUsage;
  } catch (const InvalidDataError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const InputShapeError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const RangeError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const DomainError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const ProtocolError& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const FitError& e) {
    io.err << "fit failed: " << e.what() << "\n";
    for (const auto& c : e.causes()) io.err << "  " << c << "\n";
    return kNumerical;
  } catch (const Error& e) {
    io.err << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    io.err << "error: " << e.what() << "\n";
    return kUsage;
  }
  return kUsage;
}

}  // namespace synthfid::cli
