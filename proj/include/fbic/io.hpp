#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fbic/experiments.hpp"
#include "fbic/floquet.hpp"
#include "fbic/hfe.hpp"

namespace fbic {

/// 17 significant digits, scientific notation.
std::string csv_number(double value);

/// Output directory with collision checking. Files are registered as they are
/// opened so the manifest can list them.
class OutputDirectory {
 public:
  OutputDirectory(std::filesystem::path root, bool force);

  /// Creates the directory; fails if it already holds files and force is off.
  void prepare();
  std::ofstream open(const std::string& name);
  std::filesystem::path path(const std::string& name) const { return root_ / name; }
  const std::vector<std::string>& files() const { return files_; }
  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path root_;
  bool force_;
  std::vector<std::string> files_;
};

class CsvWriter {
 public:
  CsvWriter(std::ostream& out, const std::vector<std::string>& header);
  CsvWriter& operator<<(double value);
  CsvWriter& operator<<(int value);
  CsvWriter& operator<<(long value);
  CsvWriter& operator<<(std::size_t value);
  CsvWriter& operator<<(const std::string& value);
  CsvWriter& operator<<(const char* value) { return *this << std::string(value); }
  /// Terminates the current row; throws if the field count does not match the header.
  void end_row();

 private:
  void field(const std::string& text);
  std::ostream& out_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

void write_spectrum_csv(std::ostream& out, const SpectrumResult<double>& spectrum);
/// mode_index, n, re, im, abs2 for every mode.
void write_profiles_csv(std::ostream& out, const SpectrumResult<double>& spectrum, const LatticeConfig<double>& config);
/// t, n, re, im, abs2 for every stored sample.
void write_trajectory_csv(std::ostream& out, const Trajectory<double>& traj, const LatticeConfig<double>& config);
/// t, norm, P.
void write_summary_csv(std::ostream& out, const Trajectory<double>& traj);
void write_ipr_map_csv(std::ostream& out, const std::vector<IprMapRow>& rows);
void write_quasienergy_map_csv(std::ostream& out, const std::vector<IprMapRow>& rows);
void write_decay_csv(std::ostream& out, const std::vector<DecayPoint>& points);
void write_reflectivity_csv(std::ostream& out, const std::vector<ScatterPoint>& points);
void write_nonlinear_csv(std::ostream& out, const std::vector<NonlinearPoint>& points);

}  // namespace fbic
