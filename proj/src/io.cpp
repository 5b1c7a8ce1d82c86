#include "nlsys/io.hpp"

#include <cstdint>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace nlsys::io {

namespace fs = std::filesystem;
using nlohmann::json;

Eigen::MatrixXd read_matrix(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open matrix file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double v;
    while (ls >> v) row.push_back(v);
    if (!ls.eof() && ls.fail()) throw ParseError("bad number in matrix file: " + path.string());
    if (!row.empty()) rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ParseError("empty matrix file: " + path.string());
  const size_t cols = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != cols) throw ParseError("ragged matrix file: " + path.string());
  Eigen::MatrixXd m(rows.size(), cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < cols; ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix(const fs::path& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << m(i, j);
    out << "\n";
  }
}

void write_profile(const fs::path& path, const groundstate::RadialProfile& profile) {
  std::ofstream out(path);
  out << std::setprecision(17);
  out << "# nlsys radial profile\n";
  out << "# dimension " << profile.dimension << "\n";
  out << "# exponent " << profile.exponent << "\n";
  out << "# norm_sq " << profile.norm_sq << "\n";
  out << "# l2p_norm_pow " << profile.l2p_norm_pow << "\n";
  out << "# center_value " << profile.center_value << "\n";
  for (Eigen::Index k = 0; k < profile.radii.size(); ++k)
    out << profile.radii[k] << " " << profile.values[k] << "\n";
}

groundstate::RadialProfile read_profile(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open profile: " + path.string());
  groundstate::RadialProfile p;
  std::vector<double> rs, ws;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ls(line.substr(1));
      std::string key;
      ls >> key;
      if (key == "dimension") ls >> p.dimension;
      else if (key == "exponent") ls >> p.exponent;
      else if (key == "norm_sq") ls >> p.norm_sq;
      else if (key == "l2p_norm_pow") ls >> p.l2p_norm_pow;
      else if (key == "center_value") ls >> p.center_value;
      continue;
    }
    std::istringstream ls(line);
    double r, w;
    if (ls >> r >> w) {
      rs.push_back(r);
      ws.push_back(w);
    }
  }
  if (rs.size() < 4) throw ParseError("profile table too short: " + path.string());
  p.radii = Eigen::Map<Eigen::ArrayXd>(rs.data(), rs.size());
  p.values = Eigen::Map<Eigen::ArrayXd>(ws.data(), ws.size());
  // slopes are not stored; rebuild them by central differences
  p.slopes = Eigen::ArrayXd::Zero(p.radii.size());
  for (Eigen::Index k = 1; k + 1 < p.radii.size(); ++k)
    p.slopes[k] = (p.values[k + 1] - p.values[k - 1]) / (p.radii[k + 1] - p.radii[k - 1]);
  p.slopes[p.radii.size() - 1] = 0.0;
  return p;
}

void write_checkpoint(const fs::path& path, const pde::SystemState& state) {
  std::ofstream out(path, std::ios::binary);
  out << "nlsys-checkpoint 1\n";
  out << "dim " << state.box.dim << "\n";
  out << "L " << std::setprecision(17) << state.box.L << "\n";
  out << "n " << state.box.n << "\n";
  out << "ell " << state.ell() << "\n";
  out << "sym_m " << state.sym_m << "\n";
  out << "tags";
  for (auto t : state.tags) out << " " << static_cast<int>(t);
  out << "\ndata\n";
  for (const auto& f : state.fields)
    out.write(reinterpret_cast<const char*>(f.data()),
              static_cast<std::streamsize>(f.size() * sizeof(double)));
}

pde::SystemState read_checkpoint(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open checkpoint: " + path.string());
  std::string magic;
  int version = 0;
  in >> magic >> version;
  if (magic != "nlsys-checkpoint" || version != 1)
    throw ParseError("not a checkpoint file: " + path.string());
  pde::SystemState st;
  int ell = 0;
  std::string key;
  while (in >> key) {
    if (key == "dim") in >> st.box.dim;
    else if (key == "L") in >> st.box.L;
    else if (key == "n") in >> st.box.n;
    else if (key == "ell") in >> ell;
    else if (key == "sym_m") in >> st.sym_m;
    else if (key == "tags") {
      st.tags.resize(ell);
      for (int i = 0; i < ell; ++i) {
        int t;
        in >> t;
        st.tags[i] = static_cast<pde::SymTag>(t);
      }
    } else if (key == "data") {
      break;
    } else {
      throw ParseError("unknown checkpoint key: " + key);
    }
  }
  in.get();  // newline after "data"
  st.box.validate();
  st.fields.assign(ell, Eigen::ArrayXd::Zero(st.box.points()));
  for (auto& f : st.fields) {
    in.read(reinterpret_cast<char*>(f.data()),
            static_cast<std::streamsize>(f.size() * sizeof(double)));
    if (!in) throw ParseError("truncated checkpoint: " + path.string());
  }
  if (st.tags.empty()) st.tags.assign(ell, pde::SymTag::None);
  return st;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  out << std::setprecision(17);
  for (size_t k = 0; k < header.size(); ++k) out << (k ? "," : "") << header[k];
  out << "\n";
  for (const auto& row : rows) {
    for (size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k];
    out << "\n";
  }
}

std::string config_hash_hex(const json& j) {
  const std::string s = j.dump();
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  const bool beta_eq = beta.rows() == o.beta.rows() && beta.cols() == o.beta.cols() &&
                       (beta.array() == o.beta.array()).all();
  return beta_eq && dim == o.dim && p == o.p && beta_file == o.beta_file &&
         potentials == o.potentials && rho == o.rho && boundaries == o.boundaries &&
         q_plus == o.q_plus && q_minus == o.q_minus && L == o.L && n == o.n &&
         max_iter == o.max_iter && tol == o.tol && sym_m == o.sym_m &&
         apply_symmetry == o.apply_symmetry && seed_radius == o.seed_radius &&
         seed_separation == o.seed_separation && seed_checkpoint == o.seed_checkpoint &&
         shoot_step == o.shoot_step && shoot_rmax == o.shoot_rmax &&
         cstar_estimate == o.cstar_estimate && cstar == o.cstar && rng_seed == o.rng_seed &&
         out_dir == o.out_dir && out_checkpoint == o.out_checkpoint &&
         out_convergence == o.out_convergence && out_reports == o.out_reports;
}

json to_json(const ExperimentConfig& cfg) {
  json problem;
  problem["dim"] = cfg.dim;
  problem["p"] = cfg.p;
  if (!cfg.beta_file.empty()) {
    problem["beta_file"] = cfg.beta_file;
  } else {
    json rows = json::array();
    for (Eigen::Index i = 0; i < cfg.beta.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < cfg.beta.cols(); ++j) row.push_back(cfg.beta(i, j));
      rows.push_back(row);
    }
    problem["beta"] = rows;
  }
  json pots = json::array();
  for (const auto& pc : cfg.potentials) {
    json p;
    p["type"] = pc.type;
    if (pc.type == "constant") {
      p["value"] = pc.value;
    } else {
      p["floor"] = pc.floor;
      p["depth"] = pc.depth;
      p["width"] = pc.width;
    }
    pots.push_back(p);
  }
  problem["potentials"] = pots;
  problem["rho"] = cfg.rho;

  json decomposition;
  decomposition["boundaries"] = cfg.boundaries;
  decomposition["q_plus"] = cfg.q_plus;
  decomposition["q_minus"] = cfg.q_minus;

  json solver;
  solver["L"] = cfg.L;
  solver["n"] = cfg.n;
  solver["max_iter"] = cfg.max_iter;
  solver["tol"] = cfg.tol;
  solver["sym_m"] = cfg.sym_m;
  solver["apply_symmetry"] = cfg.apply_symmetry;
  solver["seed_radius"] = cfg.seed_radius;
  solver["seed_separation"] = cfg.seed_separation;
  if (!cfg.seed_checkpoint.empty()) solver["seed_checkpoint"] = cfg.seed_checkpoint;
  solver["shoot_step"] = cfg.shoot_step;
  solver["shoot_rmax"] = cfg.shoot_rmax;
  if (cfg.cstar_estimate)
    solver["cstar"] = "estimate";
  else
    solver["cstar"] = cfg.cstar;
  solver["rng_seed"] = cfg.rng_seed;

  json outputs;
  outputs["dir"] = cfg.out_dir;
  outputs["checkpoint"] = cfg.out_checkpoint;
  outputs["convergence"] = cfg.out_convergence;
  outputs["reports"] = cfg.out_reports;

  json j;
  j["problem"] = problem;
  j["decomposition"] = decomposition;
  j["solver"] = solver;
  j["outputs"] = outputs;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    const json& problem = j.at("problem");
    cfg.dim = problem.at("dim").get<int>();
    cfg.p = problem.at("p").get<double>();
    if (problem.contains("beta_file")) {
      cfg.beta_file = problem.at("beta_file").get<std::string>();
      cfg.beta.resize(0, 0);
    } else {
      const json& rows = problem.at("beta");
      const size_t nr = rows.size();
      const size_t nc = nr ? rows.at(0).size() : 0;
      cfg.beta.resize(nr, nc);
      for (size_t i = 0; i < nr; ++i) {
        if (rows.at(i).size() != nc) throw ParseError("ragged beta matrix");
        for (size_t jj = 0; jj < nc; ++jj) cfg.beta(i, jj) = rows.at(i).at(jj).get<double>();
      }
    }
    cfg.potentials.clear();
    for (const auto& p : problem.at("potentials")) {
      PotentialConfig pc;
      pc.type = p.at("type").get<std::string>();
      if (pc.type == "constant") {
        pc.value = p.value("value", 1.0);
      } else if (pc.type == "gaussian_well") {
        pc.floor = p.at("floor").get<double>();
        pc.depth = p.value("depth", 0.0);
        pc.width = p.value("width", 1.0);
      } else {
        throw ParseError("unknown potential type: " + pc.type);
      }
      cfg.potentials.push_back(pc);
    }
    cfg.rho = problem.value("rho", 0.0);

    const json& dec = j.at("decomposition");
    cfg.boundaries = dec.at("boundaries").get<std::vector<int>>();
    cfg.q_plus = dec.value("q_plus", std::vector<int>{});
    cfg.q_minus = dec.value("q_minus", std::vector<int>{});

    const ExperimentConfig defaults;
    const json solver = j.value("solver", json::object());
    cfg.L = solver.value("L", defaults.L);
    cfg.n = solver.value("n", defaults.n);
    cfg.max_iter = solver.value("max_iter", defaults.max_iter);
    cfg.tol = solver.value("tol", defaults.tol);
    cfg.sym_m = solver.value("sym_m", defaults.sym_m);
    cfg.apply_symmetry = solver.value("apply_symmetry", defaults.apply_symmetry);
    cfg.seed_radius = solver.value("seed_radius", defaults.seed_radius);
    cfg.seed_separation = solver.value("seed_separation", defaults.seed_separation);
    cfg.seed_checkpoint = solver.value("seed_checkpoint", std::string());
    cfg.shoot_step = solver.value("shoot_step", defaults.shoot_step);
    cfg.shoot_rmax = solver.value("shoot_rmax", defaults.shoot_rmax);
    if (solver.contains("cstar") && solver.at("cstar").is_number()) {
      cfg.cstar_estimate = false;
      cfg.cstar = solver.at("cstar").get<double>();
    } else {
      cfg.cstar_estimate = true;
      cfg.cstar = 0.0;
    }
    cfg.rng_seed = solver.value("rng_seed", defaults.rng_seed);

    const json outputs = j.value("outputs", json::object());
    cfg.out_dir = outputs.value("dir", defaults.out_dir);
    cfg.out_checkpoint = outputs.value("checkpoint", defaults.out_checkpoint);
    cfg.out_convergence = outputs.value("convergence", defaults.out_convergence);
    cfg.out_reports = outputs.value("reports", defaults.out_reports);
  } catch (const json::exception& e) {
    throw ParseError(std::string("config parse failure: ") + e.what());
  }
  return cfg;
}

ExperimentConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("invalid JSON: ") + e.what());
  }
  return config_from_json(j);
}

Eigen::MatrixXd resolve_matrix(const ExperimentConfig& cfg, const fs::path& config_dir) {
  if (!cfg.beta_file.empty()) {
    fs::path p = cfg.beta_file;
    if (p.is_relative()) p = config_dir / p;
    return read_matrix(p);
  }
  if (cfg.beta.size() == 0) throw ParseError("config has neither beta nor beta_file");
  return cfg.beta;
}

pde::Potential to_potential(const PotentialConfig& cfg) {
  pde::Potential v;
  if (cfg.type == "constant") {
    v.kind = pde::Potential::Kind::Constant;
    v.value = cfg.value;
  } else {
    v.kind = pde::Potential::Kind::GaussianWell;
    v.floor = cfg.floor;
    v.depth = cfg.depth;
    v.width = cfg.width;
  }
  return v;
}

pde::SystemSpec to_system_spec(const ExperimentConfig& cfg, const Eigen::MatrixXd& beta) {
  std::vector<pde::Potential> pots;
  for (const auto& pc : cfg.potentials) pots.push_back(to_potential(pc));
  return pde::SystemSpec::make(cfg.dim, cfg.p, coupling::CouplingMatrix::from(beta), pots,
                               cfg.rho);
}

coupling::SignPartition to_sign_partition(const ExperimentConfig& cfg) {
  coupling::SignPartition signs;
  for (int h : cfg.q_plus) signs.plus.push_back(h - 1);  // file labels are 1-based
  for (int h : cfg.q_minus) signs.minus.push_back(h - 1);
  return signs;
}

}  // namespace nlsys::io
