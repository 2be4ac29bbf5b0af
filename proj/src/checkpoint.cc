// Copyright 2026 The spkmrc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spkmrc/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "spkmrc/errors.h"

namespace spkmrc {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'P', 'K', 'M', 'R', 'C', '\0', '\1'};

enum RecordKind : std::uint32_t { kParam = 0, kFirstMoment = 1, kSecondMoment = 2 };

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}
  template <typename T>
  void Pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void Bytes(const std::string& s) {
    Pod<std::uint64_t>(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void Record(RecordKind kind, const std::string& name, const Tensor& t) {
    Pod<std::uint32_t>(kind);
    Pod<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    out_.write(name.data(), static_cast<std::streamsize>(name.size()));
    Pod<std::uint32_t>(2);
    Pod<std::uint64_t>(t.rows());
    Pod<std::uint64_t>(t.cols());
    out_.write(reinterpret_cast<const char*>(t.ptr()),
               static_cast<std::streamsize>(t.size() * sizeof(Real)));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}
  template <typename T>
  T Pod() {
    T v{};
    Read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
  }
  std::string Bytes() {
    const auto n = Pod<std::uint64_t>();
    if (n > (1ull << 32)) Fail("implausible string length");
    std::string s(n, '\0');
    Read(s.data(), n);
    return s;
  }
  void Read(char* dst, std::size_t n) {
    in_.read(dst, static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) Fail("truncated file");
  }
  [[noreturn]] void Fail(const std::string& what) const {
    throw CheckpointError(source_ + ": " + what);
  }

 private:
  std::istream& in_;
  std::string source_;
};

}  // namespace

Checkpoint MakeCheckpoint(const TrainConfig& config, const Vocabulary& vocab,
                          const SpeakerMrcModel& model, const AdamWState& optimizer,
                          std::int64_t step) {
  Checkpoint c;
  c.config = config;
  c.vocab = vocab;
  c.step = step;
  for (const auto& p : model.params().items()) c.params.push_back({p->name, p->value});
  c.optimizer = optimizer;
  return c;
}

void SaveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  const std::size_t n = checkpoint.params.size();
  const bool with_moments = !checkpoint.optimizer.first_moment.empty();
  if (with_moments && (checkpoint.optimizer.first_moment.size() != n ||
                       checkpoint.optimizer.second_moment.size() != n)) {
    throw CheckpointError("optimizer moments do not match the parameter list");
  }
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write " + tmp.string());
    Writer w(out);
    out.write(kMagic, sizeof(kMagic));
    w.Bytes(checkpoint.config.ToText());
    w.Bytes(checkpoint.vocab.Serialize());
    w.Pod<std::int64_t>(checkpoint.step);
    w.Pod<std::int64_t>(checkpoint.optimizer.step);
    std::uint64_t total = 0;
    for (const NamedTensor& p : checkpoint.params) total += p.value.size();
    w.Pod<std::uint64_t>(with_moments ? 3 * n : n);
    w.Pod<std::uint64_t>(total);
    for (std::size_t i = 0; i < n; ++i) {
      const NamedTensor& p = checkpoint.params[i];
      w.Record(kParam, p.name, p.value);
      if (with_moments) {
        w.Record(kFirstMoment, p.name, checkpoint.optimizer.first_moment[i]);
        w.Record(kSecondMoment, p.name, checkpoint.optimizer.second_moment[i]);
      }
    }
    out.flush();
    if (!out) throw CheckpointError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open " + path.string());
  Reader r(in, path.string());
  char magic[sizeof(kMagic)];
  r.Read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) r.Fail("bad magic");
  Checkpoint c;
  try {
    c.config = TrainConfig::FromText(r.Bytes());
    c.vocab = Vocabulary::Deserialize(r.Bytes());
  } catch (const CheckpointError&) {
    throw;
  } catch (const Error& e) {
    r.Fail(e.what());
  }
  c.step = r.Pod<std::int64_t>();
  c.optimizer.step = r.Pod<std::int64_t>();
  const auto records = r.Pod<std::uint64_t>();
  const auto total = r.Pod<std::uint64_t>();
  std::uint64_t seen = 0;
  for (std::uint64_t k = 0; k < records; ++k) {
    const auto kind = r.Pod<std::uint32_t>();
    const auto name_len = r.Pod<std::uint32_t>();
    if (name_len > 4096) r.Fail("implausible name length");
    std::string name(name_len, '\0');
    r.Read(name.data(), name_len);
    if (r.Pod<std::uint32_t>() != 2) r.Fail("unsupported rank for " + name);
    const auto rows = r.Pod<std::uint64_t>();
    const auto cols = r.Pod<std::uint64_t>();
    if (rows * cols > (1ull << 31)) r.Fail("implausible shape for " + name);
    Tensor t(rows, cols);
    r.Read(reinterpret_cast<char*>(t.ptr()), t.size() * sizeof(Real));
    switch (kind) {
      case kParam:
        c.params.push_back({std::move(name), std::move(t)});
        seen += rows * cols;
        break;
      case kFirstMoment:
        if (c.params.empty() || c.params.back().name != name) r.Fail("moment out of order: " + name);
        c.optimizer.first_moment.push_back(std::move(t));
        break;
      case kSecondMoment:
        if (c.params.empty() || c.params.back().name != name) r.Fail("moment out of order: " + name);
        c.optimizer.second_moment.push_back(std::move(t));
        break;
      default:
        r.Fail("unknown record kind " + std::to_string(kind));
    }
  }
  if (seen != total) r.Fail("parameter count mismatch");
  if (!c.optimizer.first_moment.empty() &&
      (c.optimizer.first_moment.size() != c.params.size() ||
       c.optimizer.second_moment.size() != c.params.size())) {
    r.Fail("incomplete optimizer moments");
  }
  if (in.peek() != std::char_traits<char>::eof()) r.Fail("trailing bytes");
  return c;
}

SpeakerMrcModel RestoreModel(const Checkpoint& checkpoint) {
  const ModelConfig mc = checkpoint.config.ToModelConfig(
      static_cast<int>(checkpoint.vocab.size()), static_cast<int>(checkpoint.vocab.num_relations()));
  SpeakerMrcModel model(mc, checkpoint.config.seed);
  const auto& items = model.params().items();
  if (items.size() != checkpoint.params.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(checkpoint.params.size()) +
                          " parameters, configuration implies " + std::to_string(items.size()));
  }
  for (std::size_t i = 0; i < items.size(); ++i) {
    const NamedTensor& src = checkpoint.params[i];
    Parameter& dst = *items[i];
    if (src.name != dst.name || !src.value.SameShape(dst.value)) {
      throw CheckpointError("parameter " + std::to_string(i) + " mismatch: " + src.name + " " +
                            src.value.ShapeString() + " vs " + dst.name + " " +
                            dst.value.ShapeString());
    }
    dst.value = src.value;
  }
  return model;
}

}  // namespace spkmrc
