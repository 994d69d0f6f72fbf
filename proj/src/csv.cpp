#include "dichot/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace dichot {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

TrialDataset read_wide_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ValidationError("cannot open " + path.string());
  }
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("no subjects");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.size() < 4 || header[0] != "subject_id" || header[1] != "trt") {
    throw ValidationError(path.string() +
                          ": expected header subject_id,trt,y1,...,yJ");
  }
  const std::size_t n_visits = header.size() - 2;
  for (std::size_t j = 0; j < n_visits; ++j) {
    if (header[j + 2] != "y" + std::to_string(j + 1)) {
      throw ValidationError(path.string() + ": bad outcome column name '" +
                            header[j + 2] + "'");
    }
  }

  std::vector<SubjectRecord> subjects;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != n_visits + 2) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected " + std::to_string(n_visits + 2) +
                            " fields, got " + std::to_string(fields.size()));
    }
    SubjectRecord s;
    s.id = fields[0];
    try {
      std::size_t pos = 0;
      s.arm = std::stoi(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument(fields[1]);
    } catch (const std::exception&) {
      throw ValidationError("subject " + s.id + ": bad trt field '" +
                            fields[1] + "'");
    }
    s.outcomes.resize(n_visits);
    for (std::size_t j = 0; j < n_visits; ++j) {
      const std::string& f = fields[j + 2];
      if (f.empty()) continue;
      try {
        std::size_t pos = 0;
        s.outcomes[j] = std::stod(f, &pos);
        if (pos != f.size()) throw std::invalid_argument(f);
      } catch (const std::exception&) {
        throw ValidationError("subject " + s.id + ": bad value '" + f +
                              "' in column y" + std::to_string(j + 1));
      }
    }
    subjects.push_back(std::move(s));
  }
  if (subjects.empty()) {
    throw ValidationError("no subjects");
  }
  return TrialDataset(std::move(subjects), n_visits);
}

void write_wide_csv(const TrialDataset& dataset,
                    const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot write " + path.string());
  }
  out << "subject_id,trt";
  for (std::size_t j = 1; j <= dataset.n_visits(); ++j) out << ",y" << j;
  out << "\n";
  for (const auto& s : dataset.subjects()) {
    out << s.id << "," << s.arm;
    for (const auto& v : s.outcomes) {
      out << ",";
      if (v.has_value()) out << format_value(*v);
    }
    out << "\n";
  }
  if (!out) {
    throw Error("write failed for " + path.string());
  }
}

}  // namespace dichot
