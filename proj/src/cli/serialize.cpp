#include "mubsearch/serialize.hpp"

#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <tuple>

namespace mub::io {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> parse_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

Json basis_set_to_json(const BasisSet& set) {
  Json bases = Json::array();
  for (const auto& b : set) {
    Json rows = Json::array();
    for (int i = 0; i < b.dim(); ++i) {
      Json row = Json::array();
      for (int j = 0; j < b.dim(); ++j) {
        const Complex z = b.matrix()(i, j);
        row.push_back(Json::array({z.real(), z.imag()}));
      }
      rows.push_back(std::move(row));
    }
    bases.push_back(std::move(rows));
  }
  return Json{{"dim", set.dim()}, {"k", set.size()}, {"layout", "row-major"}, {"bases", std::move(bases)}};
}

BasisSet basis_set_from_json(const Json& j) {
  const int d = j.at("dim").get<int>();
  std::vector<Basis> bases;
  for (const auto& rows : j.at("bases")) {
    if (static_cast<int>(rows.size()) != d) throw std::runtime_error("basis_set_from_json: bad row count");
    ComplexMatrix m(d, d);
    for (int i = 0; i < d; ++i) {
      if (static_cast<int>(rows[i].size()) != d) throw std::runtime_error("basis_set_from_json: bad column count");
      for (int c = 0; c < d; ++c) m(i, c) = Complex(rows[i][c].at(0).get<double>(), rows[i][c].at(1).get<double>());
    }
    bases.emplace_back(std::move(m));
  }
  return BasisSet(std::move(bases));
}

void write_basis_set_csv(std::ostream& os, const BasisSet& set) {
  os << "basis,row,col,re,im\n";
  for (int b = 0; b < set.size(); ++b) {
    const ComplexMatrix& m = set[b].matrix();
    for (int i = 0; i < set.dim(); ++i) {
      for (int j = 0; j < set.dim(); ++j) {
        os << b << ',' << i << ',' << j << ',' << format_double(m(i, j).real()) << ','
           << format_double(m(i, j).imag()) << '\n';
      }
    }
  }
}

BasisSet read_basis_set_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::runtime_error("read_basis_set_csv: empty input");
  const auto header = parse_csv_line(line);
  if (header != std::vector<std::string>{"basis", "row", "col", "re", "im"}) {
    throw std::runtime_error("read_basis_set_csv: unexpected header");
  }
  std::map<std::tuple<int, int, int>, Complex> cells;
  int nb = 0;
  int d = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    const auto f = parse_csv_line(line);
    if (f.size() != 5) throw std::runtime_error("read_basis_set_csv: expected 5 fields");
    const int b = std::stoi(f[0]);
    const int i = std::stoi(f[1]);
    const int j = std::stoi(f[2]);
    if (b < 0 || i < 0 || j < 0) throw std::runtime_error("read_basis_set_csv: negative index");
    cells[{b, i, j}] = Complex(std::stod(f[3]), std::stod(f[4]));
    nb = std::max(nb, b + 1);
    d = std::max({d, i + 1, j + 1});
  }
  if (static_cast<std::size_t>(nb) * d * d != cells.size()) {
    throw std::runtime_error("read_basis_set_csv: incomplete matrix data");
  }
  std::vector<Basis> bases;
  for (int b = 0; b < nb; ++b) {
    ComplexMatrix m(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) m(i, j) = cells.at({b, i, j});
    }
    bases.emplace_back(std::move(m));
  }
  return BasisSet(std::move(bases));
}

Json config_to_json(const OptimizerConfig& cfg) {
  return Json{{"retraction", std::string(to_string(cfg.retraction))},
              {"kappa_init", cfg.kappa_init},
              {"line_search", cfg.line_search},
              {"conjugate_gradient", cfg.use_conjugate_gradient},
              {"grad_tol", cfg.grad_tol},
              {"max_iters", cfg.max_iters},
              {"seed", cfg.seed.value}};
}

Json run_to_json(const RunRecord& r) {
  return Json{{"final_asd", r.final_asd},
              {"iterations", r.iterations},
              {"final_grad_norm", r.final_grad_norm},
              {"seed", r.seed.value},
              {"status", std::string(to_string(r.status))}};
}

Json summary_to_json(const MultiStartSummary& s, double bin_width) {
  Json hist = Json::array();
  for (const auto& b : s.maxima_histogram) hist.push_back(Json{{"center", b.center}, {"frequency", b.frequency}});
  Json finals = Json::array();
  for (const auto& r : s.records) finals.push_back(r.final_asd);
  return Json{{"runs", s.runs},
              {"best_asd", s.best().final_asd},
              {"success_rate", s.success_rate},
              {"success_bin_width", kSuccessBinWidth},
              {"bin_width", bin_width},
              {"histogram", std::move(hist)},
              {"final_asd", std::move(finals)}};
}

}  // namespace mub::io
