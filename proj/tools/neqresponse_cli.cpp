// neqresponse command-line front end. Every CSV starts with '#' comment lines
// recording the version, the subcommand and its full configuration.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "neqresponse/diagnostics.hpp"
#include "neqresponse/error.hpp"
#include "neqresponse/fluctuations.hpp"
#include "neqresponse/markov.hpp"
#include "neqresponse/model_io.hpp"
#include "neqresponse/models.hpp"
#include "neqresponse/parallel.hpp"
#include "neqresponse/pathspace.hpp"
#include "neqresponse/response.hpp"

namespace nr = neqresponse;

namespace {

[[noreturn]] void usage_error(const std::string& message) {
  throw nr::Error(nr::ErrorKind::UsageError, "cli", message);
}

struct Common {
  std::string output;
  unsigned threads = 0;
  std::uint64_t seed = 0;
};

struct PerturbationArgs {
  std::string file;
  std::string v;
  double a = 0.5;
  double b = 0.5;
  double h = 1.0;
};

struct IsingArgs {
  std::string graph = "cycle:4";
  double beta = 1.0;
  double j = 1.0;
  double field = 0.0;
  std::string psi = "one";
  double lambda = 0.0;
};

struct Args {
  Common common;
  std::string model;
  PerturbationArgs pert;
  IsingArgs ising;
  std::string q;
  std::string m;
  std::string initial = "stationary";
  std::string mu = "stationary";
  double t = 1.0;
  std::vector<double> s_points;
  std::size_t points = 20;
  bool with_fd = false;
  double h_scale = 1e-5;
  double fd_h = 0.0;
  std::size_t samples = 10000;
  double tol = 1e-10;
  bool minimizer = false;
  std::vector<double> h_list{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  std::optional<std::size_t> site;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-o,--output", c.output, "Output file (default: standard output)");
  cmd->add_option("--threads", c.threads, "Worker threads (default: $NEQRESPONSE_THREADS or all cores)");
  cmd->add_option("--seed", c.seed, "Random seed")->capture_default_str();
}

void add_model(CLI::App* cmd, Args& args) {
  cmd->add_option("-m,--model", args.model, "Model JSON file")->required();
}

void add_perturbation(CLI::App* cmd, PerturbationArgs& p) {
  cmd->add_option("--perturbation", p.file, "Perturbation spec JSON file (overrides --V/--a/--b/--h)");
  cmd->add_option("--V", p.v, "Perturbing potential (observable name)");
  cmd->add_option("--a", p.a, "Weight of the departure state")->capture_default_str();
  cmd->add_option("--b", p.b, "Weight of the arrival state")->capture_default_str();
  cmd->add_option("--h", p.h, "Constant amplitude")->capture_default_str();
}

void add_ising(CLI::App* cmd, IsingArgs& i) {
  cmd->add_option("--graph", i.graph, "cycle:N | path:N | complete:N | file:PATH")->capture_default_str();
  cmd->add_option("--beta", i.beta, "Inverse temperature")->capture_default_str();
  cmd->add_option("--J", i.j, "Coupling on every edge")->capture_default_str();
  cmd->add_option("--field", i.field, "Field on every vertex")->capture_default_str();
  cmd->add_option("--psi", i.psi, "Flip prefactor")->check(CLI::IsMember({"one", "heatbath"}))->capture_default_str();
  cmd->add_option("--lambda", i.lambda, "Exchange rate per edge")->capture_default_str();
}

void add_initial(CLI::App* cmd, std::string& initial) {
  cmd->add_option("--initial", initial, "Initial law: stationary | uniform | state:LABEL")->capture_default_str();
}

// Output goes to a buffer first so a failing run leaves no partial file.
class Report {
 public:
  Report(const CLI::App& cmd, const Common& common) : common_(common) {
    out_ << std::setprecision(17);
    out_ << "# neqresponse " << nr::version() << '\n';
    out_ << "# command: " << cmd.get_name() << '\n';
    std::istringstream config(cmd.config_to_str(true, false));
    for (std::string line; std::getline(config, line);) {
      // The thread count and output path do not change any result.
      if (line.empty() || line.rfind("threads=", 0) == 0 || line.rfind("output=", 0) == 0) continue;
      out_ << "# config: " << line << '\n';
    }
    out_ << "# seed=" << common.seed << '\n';
  }

  std::ostream& stream() { return out_; }

  void flush() {
    const std::string text = out_.str();
    if (common_.output.empty()) {
      std::cout << text << std::flush;
      return;
    }
    std::ofstream file(common_.output);
    if (!file) throw nr::Error(nr::ErrorKind::IoError, "cli", "cannot open '" + common_.output + "' for writing");
    file << text;
    if (!file) throw nr::Error(nr::ErrorKind::IoError, "cli", "error writing '" + common_.output + "'");
  }

 private:
  const Common& common_;
  std::ostringstream out_;
};

nr::Distribution initial_law(const nr::Generator& g, const std::string& spec) {
  if (spec == "stationary") return nr::stationary_distribution(g);
  if (spec == "uniform") return nr::Distribution::uniform(g.size());
  if (spec.rfind("state:", 0) == 0) {
    const auto x = g.space().find(spec.substr(6));
    if (!x) usage_error("unknown state '" + spec.substr(6) + "'");
    return nr::Distribution::point_mass(g.size(), *x);
  }
  // Comma-separated weights, normalized.
  nr::Vector p(static_cast<Eigen::Index>(g.size()));
  std::istringstream in(spec);
  std::string item;
  Eigen::Index k = 0;
  while (std::getline(in, item, ',')) {
    if (k >= p.size()) usage_error("distribution has more entries than states");
    try {
      p[k++] = std::stod(item);
    } catch (const std::exception&) {
      usage_error("cannot read distribution '" + spec + "'");
    }
  }
  if (k != p.size()) usage_error("distribution has fewer entries than states");
  if ((p.array() < 0.0).any() || !(p.sum() > 0.0)) usage_error("distribution weights must be nonnegative");
  return nr::Distribution(p / p.sum());
}

nr::PerturbationSpec perturbation(const nr::Model& model, const PerturbationArgs& p) {
  if (!p.file.empty()) return nr::load_perturbation_spec(p.file, model);
  if (p.v.empty()) usage_error("either --perturbation or --V is required");
  return {model.observable(p.v), p.a, p.b, nr::AmplitudeSchedule::constant(p.h)};
}

const nr::Observable& named(const nr::Model& model, const std::string& name, const char* flag) {
  if (name.empty()) usage_error(std::string(flag) + " is required");
  return model.observable(name);
}

nr::IsingModel ising(const IsingArgs& i) {
  nr::IsingSpec spec;
  spec.graph = nr::SpinGraph::parse(i.graph);
  spec.beta = i.beta;
  spec.energy = nr::EnergySpec::uniform(spec.graph, i.j, i.field);
  spec.psi = i.psi == "heatbath" ? nr::PsiKind::heat_bath : nr::PsiKind::one;
  spec.lambda = i.lambda;
  return nr::build_ising_generator(spec);
}

double rel_error(double value, double reference) {
  return std::abs(value - reference) / std::max(std::abs(reference), 1e-300);
}

void cmd_stationary(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::Distribution rho = nr::stationary_distribution(model.generator);
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "# residual=" << nr::stationarity_residual(model.generator, rho.values()) << '\n';
  os << "state,rho\n";
  for (std::size_t x = 0; x < rho.size(); ++x) os << model.generator.space().label(x) << ',' << rho[x] << '\n';
  report.flush();
}

void cmd_check_db(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::Distribution rho = nr::stationary_distribution(model.generator);
  const auto db = nr::check_detailed_balance(model.generator, rho, args.tol);
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "reversible,max_violation,worst_from,worst_to\n";
  os << (db.is_reversible ? "true" : "false") << ',' << db.max_violation << ','
     << model.generator.space().label(db.worst_edge.first) << ',' << model.generator.space().label(db.worst_edge.second)
     << '\n';
  report.flush();
}

void cmd_response_exact(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::PerturbationSpec spec = perturbation(model, args.pert);
  const nr::Observable& q = named(model, args.q, "--Q");
  const nr::Distribution mu = initial_law(model.generator, args.initial);
  std::vector<double> s_points = args.s_points;
  if (s_points.empty()) {
    if (args.points == 0) usage_error("--points must be positive");
    for (std::size_t k = 1; k <= args.points; ++k) s_points.push_back(args.t * double(k) / double(args.points + 1));
  }
  const auto grid = nr::response_grid(model.generator, mu, spec.potential, q, spec.a, spec.b, args.t, s_points,
                                      args.common.threads, args.initial);
  std::vector<double> fd(s_points.size());
  if (args.with_fd) {
    nr::parallel_for(s_points.size(), args.common.threads, [&](std::size_t i) {
      fd[i] = nr::response_fd_pointwise(model.generator, mu, spec.potential, q, spec.a, spec.b, s_points[i], args.t);
    });
  }
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "s,R_exact" << (args.with_fd ? ",R_fd" : "") << ",b_ds,a_dt,b_VLQ,b_LVQ\n";
  for (std::size_t i = 0; i < s_points.size(); ++i) {
    const auto& terms = grid.terms[i];
    os << s_points[i] << ',' << grid.values[i];
    if (args.with_fd) os << ',' << fd[i];
    os << ',' << terms.b_ds << ',' << terms.a_dt << ',' << terms.b_VLQ << ',' << terms.b_LVQ << '\n';
  }
  report.flush();
}

void cmd_response_fd(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::PerturbationSpec spec = perturbation(model, args.pert);
  const nr::Observable& q = named(model, args.q, "--Q");
  const nr::Distribution mu = initial_law(model.generator, args.initial);
  const double exact =
      nr::integrated_response(model.generator, mu, spec.potential, q, spec.a, spec.b, spec.schedule, args.t);
  const double fd = nr::response_fd_oracle(model.generator, mu, spec.potential, q, spec.a, spec.b, spec.schedule,
                                           args.t, args.h_scale);
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "t,R_integrated,R_fd,rel_error\n";
  os << args.t << ',' << exact << ',' << fd << ',' << rel_error(fd, exact) << '\n';
  report.flush();
}

void cmd_response_mc(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::PerturbationSpec spec = perturbation(model, args.pert);
  const nr::Observable& q = named(model, args.q, "--Q");
  const nr::Distribution mu = initial_law(model.generator, args.initial);
  const auto mc = nr::mc_response(model.generator, mu, spec, q, args.t, args.samples, args.common.seed,
                                  args.common.threads);
  const double exact =
      nr::integrated_response(model.generator, mu, spec.potential, q, spec.a, spec.b, spec.schedule, args.t);
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "t,estimate,std_error,samples,R_integrated\n";
  os << args.t << ',' << mc.estimate << ',' << mc.std_error << ',' << mc.samples << ',' << exact << '\n';
  report.flush();
}

void cmd_chi(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::Observable& v = named(model, args.pert.v, "--V");
  const nr::Observable& m = named(model, args.m, "--M");
  const nr::Distribution rho = nr::stationary_distribution(model.generator);
  const auto chi = nr::chi_formula(model.generator, rho, v, m, args.pert.a, args.pert.b);
  Report report(cmd, args.common);
  auto& os = report.stream();
  if (args.fd_h > 0.0) {
    const auto fd = nr::chi_fd(model.generator, v, m, args.pert.a, args.pert.b, args.fd_h);
    os << "chi_MV,chi_VM,chi_MV_fd,chi_VM_fd\n";
    os << chi.chi_MV << ',' << chi.chi_VM << ',' << fd.chi_MV << ',' << fd.chi_VM << '\n';
  } else {
    os << "chi_MV,chi_VM\n" << chi.chi_MV << ',' << chi.chi_VM << '\n';
  }
  report.flush();
}

void cmd_dv(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::Distribution mu = initial_law(model.generator, args.mu);
  nr::DvOptions options;
  options.tol = args.tol;
  const auto result = nr::dv_rate_function(model.generator, mu, options);
  Report report(cmd, args.common);
  auto& os = report.stream();
  if (args.minimizer) {
    os << "# rate=" << result.rate << '\n' << "state,mu,u\n";
    for (std::size_t x = 0; x < mu.size(); ++x) {
      os << model.generator.space().label(x) << ',' << mu[x] << ',' << result.minimizer[x] << '\n';
    }
  } else {
    os << "rate,grad_norm,iterations,extrapolated\n";
    os << result.rate << ',' << result.grad_norm << ',' << result.iterations << ','
       << (result.extrapolated ? "true" : "false") << '\n';
  }
  report.flush();
}

void cmd_prop3(const CLI::App& cmd, const Args& args) {
  const nr::Model model = nr::load_model(args.model);
  const nr::Observable& v = named(model, args.pert.v, "--V");
  const auto table = nr::prop3_check(model.generator, v, args.pert.a, args.pert.b, args.h_list, args.common.threads);
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "h,I,rhs,error\n";
  for (const auto& row : table.rows) os << row.h << ',' << row.rate << ',' << row.rhs << ',' << row.error << '\n';
  os << std::fixed << std::setprecision(3) << "# fitted_slope=" << table.error_slope << '\n'
     << "# rate_slope=" << table.rate_slope << '\n';
  report.flush();
}

void cmd_redi(const CLI::App& cmd, const Args& args) {
  const nr::IsingModel model = ising(args.ising);
  const auto r = nr::redi_experiment(model, args.pert.a, args.pert.b, args.h_scale, args.t, args.site);
  Report report(cmd, args.common);
  auto& os = report.stream();
  os << "variant,lhs,rhs_a_term,rhs_b_term,rhs,rel_error\n";
  os << r.variant << ',' << r.lhs << ',' << r.rhs_a_term << ',' << r.rhs_b_term << ',' << r.rhs() << ','
     << rel_error(r.lhs, r.rhs()) << '\n';
  report.flush();
}

void cmd_make_ising(const Args& args) {
  const nr::IsingModel model = ising(args.ising);
  if (args.common.output.empty()) {
    std::cout << nr::serialize_model(model.generator, model.observables);
  } else {
    nr::save_model(model.generator, model.observables, args.common.output);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear response and dynamical fluctuations of finite Markov jump processes"};
  app.set_version_flag("--version", std::string(nr::version()));
  // --h is the perturbation amplitude, so help is long-form only.
  app.set_help_flag("--help", "Print this help message and exit");
  app.require_subcommand(1);
  Args args;

  auto* stationary = app.add_subcommand("stationary", "Stationary distribution of a model");
  add_model(stationary, args);
  add_common(stationary, args.common);

  auto* check_db = app.add_subcommand("check-db", "Detailed-balance check against the stationary law");
  add_model(check_db, args);
  check_db->add_option("--tol", args.tol, "Violation tolerance")->capture_default_str();
  add_common(check_db, args.common);

  auto* exact = app.add_subcommand("response-exact", "Response function R(t,s) on a grid of s");
  add_model(exact, args);
  add_perturbation(exact, args.pert);
  exact->add_option("--Q", args.q, "Measured observable");
  exact->add_option("--t", args.t, "Observation time")->capture_default_str();
  exact->add_option("--s", args.s_points, "Comma-separated s values in (0, t)")->delimiter(',');
  exact->add_option("--points", args.points, "Number of evenly spaced s values")->capture_default_str();
  exact->add_flag("--fd", args.with_fd, "Add a finite-difference R_fd column");
  add_initial(exact, args.initial);
  add_common(exact, args.common);

  auto* fd = app.add_subcommand("response-fd", "Integrated response against the finite-difference oracle");
  add_model(fd, args);
  add_perturbation(fd, args.pert);
  fd->add_option("--Q", args.q, "Measured observable");
  fd->add_option("--t", args.t, "Observation time")->capture_default_str();
  fd->add_option("--h-scale", args.h_scale, "Finite-difference amplitude")->capture_default_str();
  add_initial(fd, args.initial);
  add_common(fd, args.common);

  auto* mc = app.add_subcommand("response-mc", "Integrated response by Girsanov-weighted Monte Carlo");
  add_model(mc, args);
  add_perturbation(mc, args.pert);
  mc->add_option("--Q", args.q, "Measured observable");
  mc->add_option("--t", args.t, "Observation time")->capture_default_str();
  mc->add_option("--samples", args.samples, "Number of trajectories")->capture_default_str();
  add_initial(mc, args.initial);
  add_common(mc, args.common);

  auto* chi = app.add_subcommand("chi", "Stationary susceptibilities chi_MV and chi_VM");
  add_model(chi, args);
  chi->add_option("--V", args.pert.v, "Perturbing potential");
  chi->add_option("--M", args.m, "Second observable");
  chi->add_option("--a", args.pert.a, "Weight of the departure state")->capture_default_str();
  chi->add_option("--b", args.pert.b, "Weight of the arrival state")->capture_default_str();
  chi->add_option("--fd-h", args.fd_h, "Also difference perturbed stationary laws at this amplitude");
  add_common(chi, args.common);

  auto* dv = app.add_subcommand("dv", "Occupation-measure rate function I(mu)");
  add_model(dv, args);
  dv->add_option("--mu", args.mu, "stationary | uniform | state:LABEL | comma-separated weights")
      ->capture_default_str();
  dv->add_option("--tol", args.tol, "Gradient tolerance")->capture_default_str();
  dv->add_flag("--minimizer", args.minimizer, "Print the optimal u = log g per state");
  add_common(dv, args.common);

  auto* prop3 = app.add_subcommand("prop3", "Small-amplitude rate function versus escape-rate correlation");
  add_model(prop3, args);
  prop3->add_option("--V", args.pert.v, "Perturbing potential");
  prop3->add_option("--a", args.pert.a, "Weight of the departure state")->capture_default_str();
  prop3->add_option("--b", args.pert.b, "Weight of the arrival state")->capture_default_str();
  prop3->add_option("--h", args.h_list, "Comma-separated amplitudes")->delimiter(',')->capture_default_str();
  add_common(prop3, args.common);

  auto* redi = app.add_subcommand("redi", "Magnetization response of the Ising exchange model");
  add_ising(redi, args.ising);
  redi->add_option("--a", args.pert.a, "Weight of the departure state")->capture_default_str();
  redi->add_option("--b", args.pert.b, "Weight of the arrival state")->capture_default_str();
  redi->add_option("--t", args.t, "Observation time")->capture_default_str();
  redi->add_option("--h-scale", args.h_scale, "Finite-difference amplitude")->capture_default_str();
  redi->add_option("--site", args.site, "Couple the field to one vertex only");
  add_common(redi, args.common);

  auto* make_ising = app.add_subcommand("make-ising", "Write an Ising model as JSON");
  add_ising(make_ising, args.ising);
  add_common(make_ising, args.common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "UsageError: " << e.what() << '\n';
    return nr::exit_code(nr::ErrorKind::UsageError);
  }

  try {
    if (stationary->parsed()) cmd_stationary(*stationary, args);
    if (check_db->parsed()) cmd_check_db(*check_db, args);
    if (exact->parsed()) cmd_response_exact(*exact, args);
    if (fd->parsed()) cmd_response_fd(*fd, args);
    if (mc->parsed()) cmd_response_mc(*mc, args);
    if (chi->parsed()) cmd_chi(*chi, args);
    if (dv->parsed()) cmd_dv(*dv, args);
    if (prop3->parsed()) cmd_prop3(*prop3, args);
    if (redi->parsed()) cmd_redi(*redi, args);
    if (make_ising->parsed()) cmd_make_ising(args);
  } catch (const nr::Error& e) {
    std::cerr << e.what() << '\n';
    return nr::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "SolverFailure: " << e.what() << '\n';
    return nr::exit_code(nr::ErrorKind::SolverFailure);
  }
  return 0;
}
