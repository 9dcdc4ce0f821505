#include "parafem/records.hpp"

#include <iomanip>
#include <map>
#include <sstream>

namespace parafem {

RecordWriter::RecordWriter(const std::filesystem::path& dir)
{
  std::filesystem::create_directories(dir);
  records_.open(dir / "records.csv");
  errors_.open(dir / "errors.csv");
  if (!records_ || !errors_)
    throw std::runtime_error("cannot create record files in " + dir.string());
  records_ << kRecordsHeader << '\n' << std::setprecision(12);
  errors_ << kErrorsHeader << '\n' << std::setprecision(12);
}

void RecordWriter::write(const AdaptRecord& record)
{
  for (const auto& it : record.iterations) {
    records_ << it.step << ',' << it.k << ',' << it.nov << ',' << it.eta << ',' << it.itero << ','
             << record.training.adam_epochs << ',' << record.training.lbfgs_iterations << ','
             << std::fixed << std::setprecision(1) << it.wall_ms << std::defaultfloat
             << std::setprecision(12) << '\n';
    if (!std::isnan(it.grad_error))
      errors_ << it.step << ',' << it.k << ',' << it.nov << ',' << it.grad_error << '\n';
  }
  records_.flush();
  errors_.flush();
}

namespace {

std::vector<std::string> split(const std::string& line)
{
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ','))
    out.push_back(cell);
  return out;
}

template <class Fn>
void read_csv(const std::filesystem::path& path, const std::string& header, std::size_t columns,
              Fn&& row)
{
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line) || line.substr(0, header.size()) != header)
    throw std::runtime_error(path.string() + ": expected header '" + header + "'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty())
      continue;
    const auto cells = split(line);
    if (cells.size() != columns)
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": expected " +
                               std::to_string(columns) + " columns");
    try {
      row(cells);
    } catch (const std::logic_error&) {
      throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": bad number");
    }
  }
}

} // namespace

std::vector<IterationRecord> read_records(const std::filesystem::path& records_csv)
{
  std::vector<IterationRecord> rows;
  read_csv(records_csv, kRecordsHeader, 8, [&](const std::vector<std::string>& c) {
    IterationRecord r;
    r.step = std::stoi(c[0]);
    r.k = std::stoi(c[1]);
    r.nov = static_cast<std::size_t>(std::stoull(c[2]));
    r.eta = std::stod(c[3]);
    r.itero = std::stoi(c[4]);
    r.wall_ms = std::stod(c[7]);
    rows.push_back(r);
  });
  const auto errors = records_csv.parent_path() / "errors.csv";
  if (std::filesystem::exists(errors)) {
    std::map<std::pair<int, int>, double> err;
    read_csv(errors, kErrorsHeader, 4, [&](const std::vector<std::string>& c) {
      err[{std::stoi(c[0]), std::stoi(c[1])}] = std::stod(c[3]);
    });
    for (auto& r : rows)
      if (auto it = err.find({r.step, r.k}); it != err.end())
        r.grad_error = it->second;
  }
  return rows;
}

} // namespace parafem
