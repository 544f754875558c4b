#include "fbic/io.hpp"

#include <cstdio>
#include <stdexcept>

namespace fbic {

std::string csv_number(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", value);
  return buf;
}

OutputDirectory::OutputDirectory(std::filesystem::path root, bool force) : root_(std::move(root)), force_(force) {}

void OutputDirectory::prepare() {
  namespace fs = std::filesystem;
  if (fs::exists(root_)) {
    if (!fs::is_directory(root_)) throw std::runtime_error("output path '" + root_.string() + "' is not a directory");
    if (!fs::is_empty(root_) && !force_)
      throw std::runtime_error("output directory '" + root_.string() + "' is not empty (use --force to overwrite)");
  } else {
    fs::create_directories(root_);
  }
}

std::ofstream OutputDirectory::open(const std::string& name) {
  std::ofstream out(root_ / name, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + (root_ / name).string() + "'");
  files_.push_back(name);
  return out;
}

CsvWriter::CsvWriter(std::ostream& out, const std::vector<std::string>& header) : out_(out), columns_(header.size()) {
  for (const auto& name : header) field(name);
  end_row();
}

void CsvWriter::field(const std::string& text) {
  if (filled_ == columns_) throw std::logic_error("csv row has more fields than the header");
  if (filled_) out_ << ',';
  out_ << text;
  ++filled_;
}

CsvWriter& CsvWriter::operator<<(double value) {
  field(csv_number(value));
  return *this;
}
CsvWriter& CsvWriter::operator<<(int value) {
  field(std::to_string(value));
  return *this;
}
CsvWriter& CsvWriter::operator<<(long value) {
  field(std::to_string(value));
  return *this;
}
CsvWriter& CsvWriter::operator<<(std::size_t value) {
  field(std::to_string(value));
  return *this;
}
CsvWriter& CsvWriter::operator<<(const std::string& value) {
  if (value.find_first_of(",\"\n") != std::string::npos) {
    std::string quoted = "\"";
    for (char c : value) quoted += c == '"' ? std::string("\"\"") : std::string(1, c);
    field(quoted + "\"");
  } else {
    field(value);
  }
  return *this;
}

void CsvWriter::end_row() {
  if (filled_ != columns_) throw std::logic_error("csv row has fewer fields than the header");
  out_ << '\n';
  filled_ = 0;
}

void write_spectrum_csv(std::ostream& out, const SpectrumResult<double>& spectrum) {
  CsvWriter csv(out, {"mode_index", "re_eps", "im_eps", "ipr", "label", "lossy_population"});
  for (const auto& m : spectrum.modes) {
    csv << m.mode_index << m.quasi_energy.real() << m.quasi_energy.imag() << m.ipr << to_string(m.label)
        << m.lossy_population;
    csv.end_row();
  }
}

void write_profiles_csv(std::ostream& out, const SpectrumResult<double>& spectrum, const LatticeConfig<double>& config) {
  CsvWriter csv(out, {"mode_index", "n", "re", "im", "abs2"});
  for (const auto& m : spectrum.modes)
    for (int i = 0; i < m.profile.size(); ++i) {
      const auto c = m.profile(i);
      csv << m.mode_index << config.site_of(i) << c.real() << c.imag() << std::norm(c);
      csv.end_row();
    }
}

void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj, const LatticeConfig<double>& config) {
  CsvWriter csv(out, {"t", "n", "re", "im", "abs2"});
  for (std::size_t s = 0; s < traj.size(); ++s)
    for (int i = 0; i < traj.states[s].size(); ++i) {
      const auto c = traj.states[s](i);
      csv << traj.times[s] << config.site_of(i) << c.real() << c.imag() << std::norm(c);
      csv.end_row();
    }
}

void write_summary_csv(std::ostream& out, const Trajectory<double>& traj) {
  CsvWriter csv(out, {"t", "norm", "P"});
  for (std::size_t s = 0; s < traj.size(); ++s) {
    csv << traj.times[s] << traj.norms[s] << traj.leak[s];
    csv.end_row();
  }
}

void write_ipr_map_csv(std::ostream& out, const std::vector<IprMapRow>& rows) {
  CsvWriter csv(out, {"gamma_norm", "mode_index", "ipr"});
  for (const auto& r : rows) {
    csv << r.gamma_norm << r.mode_index << r.ipr;
    csv.end_row();
  }
}

void write_quasienergy_map_csv(std::ostream& out, const std::vector<IprMapRow>& rows) {
  CsvWriter csv(out, {"gamma_norm", "mode_index", "re_eps", "im_eps", "ipr", "label"});
  for (const auto& r : rows) {
    csv << r.gamma_norm << r.mode_index << r.quasi_energy.real() << r.quasi_energy.imag() << r.ipr
        << to_string(r.label);
    csv.end_row();
  }
}

void write_decay_csv(std::ostream& out, const std::vector<DecayPoint>& points) {
  CsvWriter csv(out, {"value", "gamma_norm", "omega", "gamma", "probe_time", "found", "P", "re_eps", "im_eps",
                      "norm_leak_residual", "diagnostic"});
  for (const auto& p : points) {
    csv << p.value << p.gamma_norm << p.omega << p.gamma << p.probe_time << (p.found ? 1 : 0) << p.probability
        << p.dark_quasi_energy.real() << p.dark_quasi_energy.imag() << p.norm_leak_residual << p.diagnostic;
    csv.end_row();
  }
}

void write_reflectivity_csv(std::ostream& out, const std::vector<ScatterPoint>& points) {
  CsvWriter csv(out, {"gamma", "R", "t_final", "initial_norm", "left_population", "final_norm", "surviving_fraction",
                      "norm_leak_residual"});
  for (const auto& p : points) {
    const auto& r = p.result;
    csv << p.gamma << r.reflectivity << r.t_final << r.initial_norm << r.left_population << r.final_norm
        << r.surviving_fraction << p.norm_leak_residual;
    csv.end_row();
  }
}

void write_nonlinear_csv(std::ostream& out, const std::vector<NonlinearPoint>& points) {
  CsvWriter csv(out, {"u", "P", "overlap", "final_norm", "norm_leak_residual"});
  for (const auto& p : points) {
    csv << p.u << p.probability << p.overlap << p.final_norm << p.norm_leak_residual;
    csv.end_row();
  }
}

}  // namespace fbic
