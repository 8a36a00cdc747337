#include "rilab/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace rilab {

namespace {

std::vector<std::string> tokens(std::string_view line) {
  std::vector<std::string> out;
  std::istringstream in{std::string(line)};
  for (std::string t; in >> t;) out.push_back(t);
  return out;
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto end = text.find(sep, start);
    out.push_back(text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start));
    if (end == std::string_view::npos) return out;
    start = end + 1;
  }
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view s) {
  s = trim(s);
  if (s.find('/') != std::string_view::npos) return to_double(parse_rational(s));
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  double x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return x;
}

std::int64_t parse_int(const std::string& s) {
  std::int64_t x = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not an integer: '" + s + "'");
  return x;
}

struct ParsedPieces {
  std::vector<MapPiece> pieces;
  std::vector<std::string> multipliers;
};

ParsedPieces parse_lines(std::string_view text, int cap) {
  ParsedPieces out;
  for (auto line : split(text, '\n')) {
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const auto t = tokens(line);
    if (t.empty()) continue;
    if (t[0] == "iv") {
      if (t.size() != 5) throw std::invalid_argument("map: `iv` needs four endpoints");
      MapPiece p{{parse_rational(t[1]), parse_rational(t[2])}, {parse_rational(t[3]), parse_rational(t[4])}};
      for (const Rational* r : {&p.src.lo, &p.src.hi, &p.tgt.lo, &p.tgt.hi}) {
        if (denominator_bits(*r) > cap + 1) throw RefinementCapExceeded("map: endpoint " + t[1] + " exceeds level cap");
      }
      out.pieces.push_back(std::move(p));
    } else if (t.size() == 4) {
      const int sl = static_cast<int>(parse_int(t[0])), tl = static_cast<int>(parse_int(t[2]));
      if (sl > cap || tl > cap) throw RefinementCapExceeded("map: cell level exceeds level cap");
      out.pieces.push_back({Interval::of(DyadicCell(sl, parse_int(t[1]))), Interval::of(DyadicCell(tl, parse_int(t[3])))});
    } else if (t.size() == 1) {
      out.multipliers.push_back(t[0]);
    } else {
      throw std::invalid_argument("map: cannot read line '" + std::string(line) + "'");
    }
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  char buf[32];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

std::string format_map(const MeasureMap& m) {
  std::string out;
  for (const MapPiece& p : m.pieces()) {
    const auto s = p.src.as_cell(), t = p.tgt.as_cell();
    if (s && t) {
      out += std::to_string(s->level) + ' ' + std::to_string(s->index) + ' ' + std::to_string(t->level) + ' ' +
             std::to_string(t->index) + '\n';
    } else {
      out += "iv " + to_string(p.src.lo) + ' ' + to_string(p.src.hi) + ' ' + to_string(p.tgt.lo) + ' ' +
             to_string(p.tgt.hi) + '\n';
    }
  }
  return out;
}

MeasureMap parse_map(std::string_view text, int cap) {
  auto parsed = parse_lines(text, cap);
  if (!parsed.multipliers.empty()) throw std::invalid_argument("map: unexpected multiplier lines");
  return MeasureMap(std::move(parsed.pieces));
}

std::string format_operator(const ElementaryOperator& t) {
  std::string out = format_map(t.map());
  for (double a : t.multipliers()) out += format_double(a) + '\n';
  return out;
}

ElementaryOperator parse_operator(std::string_view text, int cap) {
  auto parsed = parse_lines(text, cap);
  if (parsed.multipliers.size() != parsed.pieces.size()) {
    throw std::invalid_argument("operator: " + std::to_string(parsed.pieces.size()) + " pieces but " +
                                std::to_string(parsed.multipliers.size()) + " multipliers");
  }
  // the map sorts its pieces; carry each multiplier along with its piece
  std::vector<std::pair<MapPiece, double>> rows;
  for (std::size_t i = 0; i < parsed.pieces.size(); ++i) rows.emplace_back(parsed.pieces[i], parse_double(parsed.multipliers[i]));
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first.src.lo < b.first.src.lo; });
  std::vector<MapPiece> pieces;
  std::vector<double> mult;
  for (auto& [p, a] : rows) {
    pieces.push_back(std::move(p));
    mult.push_back(a);
  }
  return {MeasureMap(std::move(pieces)), std::move(mult)};
}

std::string format_step(const StepFunction& f) {
  std::string out;
  for (std::size_t i = 0; i < f.size(); ++i) out += (i ? "," : "") + format_double(f[i]);
  return out;
}

StepFunction parse_step(std::string_view text) {
  std::vector<double> v;
  for (auto s : split(trim(text), ',')) v.push_back(parse_double(s));
  int level = 0;
  while ((std::size_t{1} << level) < v.size()) ++level;
  if ((std::size_t{1} << level) != v.size()) {
    throw std::invalid_argument("step function: " + std::to_string(v.size()) + " values is not a power of two");
  }
  return StepFunction(level, std::move(v));
}

AtomicMeasure parse_atoms(std::string_view text) {
  std::vector<Atom> atoms;
  for (auto s : split(trim(text), ',')) {
    const auto colon = s.find(':');
    if (colon == std::string_view::npos) throw std::invalid_argument("atoms: expected position:weight");
    atoms.push_back({parse_rational(trim(s.substr(0, colon))), parse_double(s.substr(colon + 1))});
  }
  return AtomicMeasure(std::move(atoms));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rilab
