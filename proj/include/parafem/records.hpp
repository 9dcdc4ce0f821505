#pragma once

#include "parafem/adapt.hpp"

#include <filesystem>
#include <fstream>
#include <vector>

namespace parafem {

inline constexpr const char* kRecordsHeader =
  "step,k,nov,eta_global,itero,adam_epochs,lbfgs_iters,wall_ms";
inline constexpr const char* kErrorsHeader = "step,k,nov,grad_error";

/// Streams records.csv (one line per step and iteration; the training
/// columns repeat the step's training report) and errors.csv.
class RecordWriter
{
public:
  explicit RecordWriter(const std::filesystem::path& dir);

  void write(const AdaptRecord& record);
  RecordSink sink()
  {
    return [this](const AdaptRecord& r) { write(r); };
  }

private:
  std::ofstream records_;
  std::ofstream errors_;
};

/// Reads records.csv and, when present next to it, errors.csv. Throws
/// std::runtime_error on a malformed file.
std::vector<IterationRecord> read_records(const std::filesystem::path& records_csv);

} // namespace parafem
