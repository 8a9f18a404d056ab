#include "fast0tag/model_io.hpp"

#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "fast0tag/errors.hpp"
#include "text_util.hpp"

namespace f0t {

namespace {

constexpr const char* kLinearHeader = "fast0tag-linear";
constexpr const char* kNetHeader = "fast0tag-net";
constexpr char kLinearMagic[4] = {'F', '0', 'T', 'L'};
constexpr char kNetMagic[4] = {'F', '0', 'T', 'N'};

int parse_dim(const std::string& token, const std::string& context) {
  const double v = detail::parse_double(token, context);
  const int dim = static_cast<int>(v);
  if (v != static_cast<double>(dim) || dim < 1) {
    throw DataError(context + ": invalid dimension '" + token + "'");
  }
  return dim;
}

// Reads `rows` whitespace-free lines of `cols` values each.
Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols,
                            const std::string& context) {
  Eigen::MatrixXd m(rows, cols);
  std::string line;
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) throw DataError(context + ": truncated matrix");
    detail::reject_cr(line, context);
    const auto fields = detail::split(line, ' ');
    if (static_cast<Eigen::Index>(fields.size()) != cols) {
      throw DataError(context + ": row with " + std::to_string(fields.size()) +
                      " values, expected " + std::to_string(cols));
    }
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(r, c) = detail::parse_double(fields[static_cast<std::size_t>(c)], context);
    }
  }
  return m;
}

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  std::ostringstream line;
  line << std::setprecision(17);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    line.str({});
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c != 0) line << ' ';
      line << m(r, c);
    }
    out << line.str() << '\n';
  }
}

std::string read_all(std::istream& in) {
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

LinearDirectionMap parse_linear_text(std::istream& in, const std::string& header_line) {
  const auto fields = detail::split(header_line, ' ');
  if (fields.size() != 4 || fields[0] != kLinearHeader) {
    throw DataError("linear model: malformed header");
  }
  const int d = parse_dim(fields[1], "linear model header");
  const int dv = parse_dim(fields[2], "linear model header");
  LinearDirectionMap map;
  map.ridge = detail::parse_double(fields[3], "linear model header");
  map.A = read_matrix(in, d, dv, "linear model");
  return map;
}

LinearDirectionMap parse_linear_binary(const std::string& body) {
  detail::ByteReader r(reinterpret_cast<const unsigned char*>(body.data()), body.size(),
                       "linear model binary");
  const std::uint32_t d = r.u32();
  const std::uint32_t dv = r.u32();
  if (d == 0 || dv == 0) throw DataError("linear model binary: zero dimension");
  LinearDirectionMap map;
  map.ridge = r.f64();
  map.A.resize(d, dv);
  for (std::uint32_t i = 0; i < d; ++i) {
    for (std::uint32_t j = 0; j < dv; ++j) {
      map.A(static_cast<int>(i), static_cast<int>(j)) = r.f64();
    }
  }
  if (r.remaining() != 0) throw DataError("linear model binary: trailing bytes");
  if (!map.A.allFinite()) throw DataError("linear model: non-finite values");
  return map;
}

MlpModelFile parse_net_text(std::istream& in, const std::string& header_line) {
  const auto fields = detail::split(header_line, ' ');
  if (fields.size() != 7 || fields[0] != kNetHeader) {
    throw DataError("net model: malformed header");
  }
  const int dv = parse_dim(fields[1], "net model header");
  const int h1 = parse_dim(fields[2], "net model header");
  const int h2 = parse_dim(fields[3], "net model header");
  const int d = parse_dim(fields[4], "net model header");
  MlpModelFile model;
  model.dropout_rate = detail::parse_double(fields[5], "net model header");
  try {
    std::size_t used = 0;
    model.seed = std::stoull(fields[6], &used);
    if (used != fields[6].size()) throw std::invalid_argument(fields[6]);
  } catch (const std::exception&) {
    throw DataError("net model header: invalid seed '" + fields[6] + "'");
  }
  model.params.W1 = read_matrix(in, h1, dv, "net model W1");
  model.params.b1 = read_matrix(in, 1, h1, "net model b1").row(0).transpose();
  model.params.W2 = read_matrix(in, h2, h1, "net model W2");
  model.params.b2 = read_matrix(in, 1, h2, "net model b2").row(0).transpose();
  model.params.W3 = read_matrix(in, d, h2, "net model W3");
  model.params.b3 = read_matrix(in, 1, d, "net model b3").row(0).transpose();
  return model;
}

MlpModelFile parse_net_binary(const std::string& body) {
  detail::ByteReader r(reinterpret_cast<const unsigned char*>(body.data()), body.size(),
                       "net model binary");
  const std::uint32_t dv = r.u32();
  const std::uint32_t h1 = r.u32();
  const std::uint32_t h2 = r.u32();
  const std::uint32_t d = r.u32();
  if (dv == 0 || h1 == 0 || h2 == 0 || d == 0) {
    throw DataError("net model binary: zero dimension");
  }
  MlpModelFile model;
  model.dropout_rate = r.f64();
  model.seed = r.u64();
  auto matrix = [&r](std::uint32_t rows, std::uint32_t cols) {
    Eigen::MatrixXd m(rows, cols);
    for (std::uint32_t i = 0; i < rows; ++i) {
      for (std::uint32_t j = 0; j < cols; ++j) {
        m(static_cast<int>(i), static_cast<int>(j)) = r.f64();
      }
    }
    return m;
  };
  auto vector = [&r](std::uint32_t n) {
    Eigen::VectorXd v(n);
    for (std::uint32_t i = 0; i < n; ++i) v(static_cast<int>(i)) = r.f64();
    return v;
  };
  model.params.W1 = matrix(h1, dv);
  model.params.b1 = vector(h1);
  model.params.W2 = matrix(h2, h1);
  model.params.b2 = vector(h2);
  model.params.W3 = matrix(d, h2);
  model.params.b3 = vector(d);
  if (r.remaining() != 0) throw DataError("net model binary: trailing bytes");
  if (!model.params.all_finite()) throw DataError("net model: non-finite values");
  return model;
}

}  // namespace

void save_linear_map(const LinearDirectionMap& map, std::ostream& out, bool binary) {
  if (binary) {
    std::string buf;
    buf.append(kLinearMagic, 4);
    detail::put_u32(buf, static_cast<std::uint32_t>(map.A.rows()));
    detail::put_u32(buf, static_cast<std::uint32_t>(map.A.cols()));
    detail::put_f64(buf, map.ridge);
    for (Eigen::Index i = 0; i < map.A.rows(); ++i) {
      for (Eigen::Index j = 0; j < map.A.cols(); ++j) detail::put_f64(buf, map.A(i, j));
    }
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    return;
  }
  std::ostringstream header;
  header << std::setprecision(17) << kLinearHeader << ' ' << map.A.rows() << ' '
         << map.A.cols() << ' ' << map.ridge;
  out << header.str() << '\n';
  write_matrix(out, map.A);
}

void save_mlp(const MlpModelFile& model, std::ostream& out, bool binary) {
  const MlpParams& p = model.params;
  if (binary) {
    std::string buf;
    buf.append(kNetMagic, 4);
    detail::put_u32(buf, static_cast<std::uint32_t>(p.feature_dim()));
    detail::put_u32(buf, static_cast<std::uint32_t>(p.hidden1()));
    detail::put_u32(buf, static_cast<std::uint32_t>(p.hidden2()));
    detail::put_u32(buf, static_cast<std::uint32_t>(p.output_dim()));
    detail::put_f64(buf, model.dropout_rate);
    detail::put_u64(buf, model.seed);
    auto put_matrix = [&buf](const Eigen::MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) detail::put_f64(buf, m(i, j));
      }
    };
    put_matrix(p.W1);
    for (Eigen::Index i = 0; i < p.b1.size(); ++i) detail::put_f64(buf, p.b1(i));
    put_matrix(p.W2);
    for (Eigen::Index i = 0; i < p.b2.size(); ++i) detail::put_f64(buf, p.b2(i));
    put_matrix(p.W3);
    for (Eigen::Index i = 0; i < p.b3.size(); ++i) detail::put_f64(buf, p.b3(i));
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    return;
  }
  std::ostringstream header;
  header << std::setprecision(17) << kNetHeader << ' ' << p.feature_dim() << ' '
         << p.hidden1() << ' ' << p.hidden2() << ' ' << p.output_dim() << ' '
         << model.dropout_rate << ' ' << model.seed;
  out << header.str() << '\n';
  write_matrix(out, p.W1);
  write_matrix(out, p.b1.transpose());
  write_matrix(out, p.W2);
  write_matrix(out, p.b2.transpose());
  write_matrix(out, p.W3);
  write_matrix(out, p.b3.transpose());
}

LinearDirectionMap load_linear_map(std::istream& in) {
  const AnyModel model = load_model(in);
  if (const auto* linear = std::get_if<LinearDirectionMap>(&model)) return *linear;
  throw DataError("expected a linear model file");
}

MlpModelFile load_mlp(std::istream& in) {
  char head[4] = {};
  in.read(head, 4);
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got == 4 && std::equal(head, head + 4, kNetMagic)) {
    return parse_net_binary(read_all(in));
  }
  in.clear();
  std::string rest;
  std::getline(in, rest);
  const std::string header = std::string(head, got) + rest;
  if (header.rfind(kNetHeader, 0) == 0) return parse_net_text(in, header);
  throw DataError("expected a net model file");
}

AnyModel load_model(std::istream& in) {
  char head[4] = {};
  in.read(head, 4);
  const std::size_t got = static_cast<std::size_t>(in.gcount());
  if (got == 4 && std::equal(head, head + 4, kLinearMagic)) {
    return parse_linear_binary(read_all(in));
  }
  if (got == 4 && std::equal(head, head + 4, kNetMagic)) {
    return parse_net_binary(read_all(in)).params;
  }
  in.clear();
  std::string rest;
  std::getline(in, rest);
  const std::string header = std::string(head, got) + rest;
  detail::reject_cr(header, "model header");
  if (header.rfind(kLinearHeader, 0) == 0) return parse_linear_text(in, header);
  if (header.rfind(kNetHeader, 0) == 0) return parse_net_text(in, header).params;
  throw DataError("unrecognized model file header");
}

}  // namespace f0t
