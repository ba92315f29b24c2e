/* Copyright 2026 The lmsbi Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "lmsbi/checkpoint.hpp"

#include "lmsbi/binary_io.hpp"
#include "lmsbi/errors.hpp"
#include "lmsbi/parameters.hpp"

#include <fstream>
#include <limits>

namespace lmsbi {

namespace {

using binio::get;
using binio::put;

void put_vector(std::ostream& out, const Eigen::VectorXd& v) {
  binio::put_doubles(out, v.data(), static_cast<std::size_t>(v.size()));
}

Eigen::VectorXd get_vector(std::istream& in, Index size) {
  Eigen::VectorXd v(size);
  binio::get_doubles(in, v.data(), static_cast<std::size_t>(size));
  return v;
}

std::uint32_t narrow(Index v) {
  if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) throw ValidationError("dimension does not fit the checkpoint header");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_checkpoint(std::ostream& out, const PosteriorBuilder& builder) {
  const MafStackd& flow = builder.estimator.flow;
  const MafOptions opt = flow.options();
  const auto& emb = builder.estimator.embedding;
  out.write(kFlowMagic, 4);
  put<std::uint16_t>(out, kFlowVersion);
  put<std::uint8_t>(out, builder.mode == SummaryMode::learned ? 1 : 0);
  put<std::uint8_t>(out, builder.statistics == StatisticsMode::per_step ? 1 : 0);
  for (Index v : {opt.dim, opt.context_dim, opt.hidden, opt.hidden_layers, opt.layers}) put(out, narrow(v));
  put(out, narrow(emb ? emb->input_size() : 0));
  put(out, narrow(emb ? emb->hidden_size() : 0));
  if (builder.prior.dim() != opt.dim) throw ValidationError("prior dimension differs from flow dimension");
  put_vector(out, builder.prior.lower);
  put_vector(out, builder.prior.upper);
  put_vector(out, flow.theta_mean);
  put_vector(out, flow.theta_scale);
  put_vector(out, flow.context_mean);
  put_vector(out, flow.context_scale);
  if (emb) {
    put_vector(out, emb->input_mean);
    put_vector(out, emb->input_scale);
  }
  const Eigen::VectorXd params = pack(builder.estimator);
  put<std::uint64_t>(out, static_cast<std::uint64_t>(params.size()));
  put_vector(out, params);
  if (!out) throw std::runtime_error("failed writing flow checkpoint");
}

PosteriorBuilder read_checkpoint(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::string(magic, 4) != std::string(kFlowMagic, 4))
    throw ValidationError("not a flow checkpoint (bad magic)");
  const auto version = get<std::uint16_t>(in);
  if (version != kFlowVersion) throw ValidationError("unsupported flow checkpoint version " + std::to_string(version));
  PosteriorBuilder b;
  const auto mode = get<std::uint8_t>(in);
  const auto stats = get<std::uint8_t>(in);
  if (mode > 1 || stats > 1) throw ValidationError("corrupt checkpoint header");
  b.mode = mode ? SummaryMode::learned : SummaryMode::handcrafted;
  b.statistics = stats ? StatisticsMode::per_step : StatisticsMode::per_series;
  MafOptions opt;
  opt.dim = get<std::uint32_t>(in);
  opt.context_dim = get<std::uint32_t>(in);
  opt.hidden = get<std::uint32_t>(in);
  opt.hidden_layers = get<std::uint32_t>(in);
  opt.layers = get<std::uint32_t>(in);
  const Index emb_in = get<std::uint32_t>(in);
  const Index emb_hidden = get<std::uint32_t>(in);
  if ((emb_hidden > 0) != (mode == 1) || (emb_hidden > 0 && emb_hidden != opt.context_dim))
    throw ValidationError("checkpoint embedding does not match its summary mode");
  if (opt.dim < 1 || opt.dim > 1024 || opt.context_dim > (1 << 24) || opt.hidden > (1 << 16) || opt.layers > 1024 ||
      opt.hidden_layers > 1024 || emb_in > (1 << 24))
    throw ValidationError("implausible checkpoint architecture");

  b.prior.lower = get_vector(in, opt.dim);
  b.prior.upper = get_vector(in, opt.dim);
  validate(b.prior);
  b.estimator.flow = MafStackd::identity(opt);
  b.estimator.flow.theta_mean = get_vector(in, opt.dim);
  b.estimator.flow.theta_scale = get_vector(in, opt.dim);
  b.estimator.flow.context_mean = get_vector(in, opt.context_dim);
  b.estimator.flow.context_scale = get_vector(in, opt.context_dim);
  if (emb_hidden > 0) {
    RecurrentEmbeddingd emb(emb_in, emb_hidden);
    emb.input_mean = get_vector(in, emb_in);
    emb.input_scale = get_vector(in, emb_in);
    b.estimator.embedding = std::move(emb);
  }
  const auto count = get<std::uint64_t>(in);
  if (count != static_cast<std::uint64_t>(parameter_count(b.estimator)))
    throw ValidationError("checkpoint parameter count " + std::to_string(count) + " does not match its architecture");
  const Eigen::VectorXd params = get_vector(in, static_cast<Index>(count));
  if (!params.allFinite()) throw NumericError("checkpoint contains non-finite parameters");
  unpack(b.estimator, params);
  if (in.peek() != std::char_traits<char>::eof()) throw ValidationError("trailing bytes after flow checkpoint");
  return b;
}

void save_checkpoint(const std::filesystem::path& path, const PosteriorBuilder& builder) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(out, builder);
}

PosteriorBuilder load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  return read_checkpoint(in);
}

}  // namespace lmsbi
