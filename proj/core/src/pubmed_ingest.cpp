#include "sciembed/pubmed_ingest.hpp"

#include <expat.h>
#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <memory>

namespace sciembed {

namespace {

constexpr std::size_t kChunk = 1 << 16;

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

std::string trimmed(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

std::optional<int> first_year_token(std::string_view s) {
  // First run of exactly four ASCII digits.
  for (std::size_t i = 0; i < s.size();) {
    if (s[i] >= '0' && s[i] <= '9') {
      std::size_t j = i;
      while (j < s.size() && s[j] >= '0' && s[j] <= '9') ++j;
      if (j - i == 4) {
        int y = 0;
        std::from_chars(s.data() + i, s.data() + j, y);
        return y;
      }
      i = j;
    } else {
      ++i;
    }
  }
  return std::nullopt;
}

// Which field the character data currently belongs to.
enum class Field { kNone, kPmid, kTitle, kJournal, kAbstractSection, kYear, kMedlineDate };

// Element-path driven extraction. Paths are matched relative to the
// MedlineCitation element so both PubmedArticleSet and MedlineCitationSet
// wrappers work, and DeleteCitation/CommentsCorrections PMIDs are ignored.
class CitationHandler {
 public:
  explicit CitationHandler(const RecordSink& sink) : sink_(sink) {}

  void start(std::string_view name) {
    stack_.emplace_back(name);
    if (name == "MedlineCitation") {
      in_citation_ = true;
      citation_depth_ = stack_.size();
      reset();
      return;
    }
    if (!in_citation_) return;
    if (field_ != Field::kNone) return;  // inline markup inside a captured field
    const auto rel = relative();
    if (rel == "PMID") {
      field_ = Field::kPmid;
    } else if (rel == "Article/ArticleTitle") {
      field_ = Field::kTitle;
    } else if (rel == "Article/Journal/Title") {
      field_ = Field::kJournal;
    } else if (rel == "Article/Abstract/AbstractText") {
      field_ = Field::kAbstractSection;
      has_abstract_ = true;
    } else if (rel == "Article/Journal/JournalIssue/PubDate/Year") {
      field_ = Field::kYear;
    } else if (rel == "Article/Journal/JournalIssue/PubDate/MedlineDate") {
      field_ = Field::kMedlineDate;
    }
    if (field_ != Field::kNone) {
      field_depth_ = stack_.size();
      text_.clear();
    }
  }

  void end() {
    if (in_citation_ && field_ != Field::kNone && stack_.size() == field_depth_) {
      commit_field();
      field_ = Field::kNone;
    }
    if (in_citation_ && stack_.size() == citation_depth_) {
      finish_citation();
      in_citation_ = false;
    }
    stack_.pop_back();
  }

  void text(std::string_view s) {
    if (field_ == Field::kNone) return;
    text_.append(s);
    buffered_ += s.size();
    stats_.peak_buffered_bytes = std::max(stats_.peak_buffered_bytes, buffered_);
  }

  std::string path() const {
    std::string p;
    for (const auto& s : stack_) p += "/" + s;
    return p.empty() ? "/" : p;
  }

  IngestStats stats() const { return stats_; }

 private:
  std::string relative() const {
    std::string rel;
    for (std::size_t i = citation_depth_; i < stack_.size(); ++i) {
      if (!rel.empty()) rel += '/';
      rel += stack_[i];
    }
    return rel;
  }

  void reset() {
    pmid_text_.reset();
    title_.clear();
    journal_.clear();
    sections_.clear();
    has_abstract_ = false;
    year_.reset();
    medline_year_.reset();
    buffered_ = 0;
  }

  void commit_field() {
    switch (field_) {
      case Field::kPmid:
        pmid_text_ = trimmed(text_);
        break;
      case Field::kTitle:
        title_ = trimmed(text_);
        break;
      case Field::kJournal:
        journal_ = trimmed(text_);
        break;
      case Field::kAbstractSection: {
        auto t = trimmed(text_);
        if (!t.empty()) sections_.push_back(std::move(t));
        break;
      }
      case Field::kYear: {
        const auto t = trimmed(text_);
        if (t.size() == 4) year_ = first_year_token(t);
        break;
      }
      case Field::kMedlineDate:
        medline_year_ = first_year_token(text_);
        break;
      case Field::kNone:
        break;
    }
    text_.clear();
  }

  void finish_citation() {
    ++stats_.citations;
    std::uint64_t pmid = 0;
    bool ok = false;
    if (pmid_text_ && !pmid_text_->empty()) {
      const auto* b = pmid_text_->data();
      const auto* e = b + pmid_text_->size();
      auto [p, ec] = std::from_chars(b, e, pmid);
      ok = ec == std::errc() && p == e && pmid > 0;
    }
    if (!ok) {
      ++stats_.skipped;
      return;
    }
    PubRecord r;
    r.pmid = pmid;
    r.title = std::move(title_);
    r.journal = std::move(journal_);
    if (has_abstract_ && !sections_.empty()) {
      std::string joined;
      for (const auto& s : sections_) {
        if (!joined.empty()) joined += ' ';
        joined += s;
      }
      r.abstract = std::move(joined);
    }
    r.year = year_ ? year_ : medline_year_;
    ++stats_.emitted;
    sink_(std::move(r));
  }

  const RecordSink& sink_;
  std::vector<std::string> stack_;
  bool in_citation_ = false;
  std::size_t citation_depth_ = 0;
  Field field_ = Field::kNone;
  std::size_t field_depth_ = 0;
  std::string text_;
  std::size_t buffered_ = 0;

  std::optional<std::string> pmid_text_;
  std::string title_;
  std::string journal_;
  std::vector<std::string> sections_;
  bool has_abstract_ = false;
  std::optional<int> year_;
  std::optional<int> medline_year_;
  IngestStats stats_;
};

struct ParserDeleter {
  void operator()(XML_Parser p) const { XML_ParserFree(p); }
};
using ParserPtr = std::unique_ptr<std::remove_pointer_t<XML_Parser>, ParserDeleter>;

// Push-style XML parser fed with decompressed chunks.
class XmlStream {
 public:
  explicit XmlStream(const RecordSink& sink) : handler_(sink), parser_(XML_ParserCreate("UTF-8")) {
    if (!parser_) throw Error("cannot allocate XML parser");
    XML_SetUserData(parser_.get(), &handler_);
    XML_SetElementHandler(
        parser_.get(),
        [](void* ud, const XML_Char* name, const XML_Char**) {
          static_cast<CitationHandler*>(ud)->start(name);
        },
        [](void* ud, const XML_Char*) { static_cast<CitationHandler*>(ud)->end(); });
    XML_SetCharacterDataHandler(parser_.get(), [](void* ud, const XML_Char* s, int len) {
      static_cast<CitationHandler*>(ud)->text(std::string_view(s, static_cast<std::size_t>(len)));
    });
  }

  void feed(const char* data, std::size_t n, bool final) {
    if (XML_Parse(parser_.get(), data, static_cast<int>(n), final ? 1 : 0) == XML_STATUS_ERROR) {
      const auto offset = static_cast<std::uint64_t>(XML_GetCurrentByteIndex(parser_.get()));
      std::string what = "malformed XML: ";
      what += XML_ErrorString(XML_GetErrorCode(parser_.get()));
      what += " (line " + std::to_string(XML_GetCurrentLineNumber(parser_.get())) + ")";
      throw XmlParseError(what, offset, handler_.path());
    }
  }

  IngestStats stats() const { return handler_.stats(); }

 private:
  CitationHandler handler_;
  ParserPtr parser_;
};

}  // namespace

std::string_view to_string(RecordVerdict v) noexcept {
  switch (v) {
    case RecordVerdict::kEligibleForEncoding:
      return "eligible-for-encoding";
    case RecordVerdict::kTitleOnly:
      return "title-only";
    case RecordVerdict::kInvalid:
      return "invalid";
  }
  return "invalid";
}

RecordVerdict validate_record(const PubRecord& r) noexcept {
  const bool has_title = !trimmed(r.title).empty();
  const bool has_abstract = r.abstract && !trimmed(*r.abstract).empty();
  if (has_title && has_abstract) return RecordVerdict::kEligibleForEncoding;
  if (has_title && !r.abstract) return RecordVerdict::kTitleOnly;
  return RecordVerdict::kInvalid;
}

IngestStats parse_xml(std::istream& source, const RecordSink& sink) {
  XmlStream xml(sink);
  std::vector<char> buf(kChunk);
  while (source) {
    source.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto got = static_cast<std::size_t>(source.gcount());
    if (got == 0) break;
    xml.feed(buf.data(), got, false);
  }
  xml.feed(nullptr, 0, true);
  return xml.stats();
}

IngestStats parse_archive(std::istream& source, const RecordSink& sink) {
  XmlStream xml(sink);

  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw StreamError("cannot initialise inflate", 0);
  std::unique_ptr<z_stream, void (*)(z_stream*)> guard(&zs, [](z_stream* z) { inflateEnd(z); });

  std::vector<char> in(kChunk);
  std::vector<char> out(kChunk);
  std::uint64_t consumed = 0;  // compressed bytes handed to zlib so far
  bool member_done = false;
  bool any_input = false;

  while (true) {
    source.read(in.data(), static_cast<std::streamsize>(in.size()));
    const auto got = static_cast<std::size_t>(source.gcount());
    if (got == 0) break;
    any_input = true;
    zs.next_in = reinterpret_cast<Bytef*>(in.data());
    zs.avail_in = static_cast<uInt>(got);
    int rc = Z_OK;
    do {
      if (member_done) {
        // Another gzip member follows.
        if (inflateReset(&zs) != Z_OK) throw StreamError("inflate reset failed", consumed);
        member_done = false;
      }
      zs.next_out = reinterpret_cast<Bytef*>(out.data());
      zs.avail_out = static_cast<uInt>(out.size());
      const auto before = zs.avail_in;
      rc = inflate(&zs, Z_NO_FLUSH);
      consumed += before - zs.avail_in;
      if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR) {
        throw StreamError(std::string("gzip decompression failed: ") + (zs.msg ? zs.msg : "corrupt data"),
                          consumed);
      }
      const std::size_t produced = out.size() - zs.avail_out;
      if (produced > 0) xml.feed(out.data(), produced, false);
      if (rc == Z_STREAM_END) member_done = true;
    } while (zs.avail_in > 0 || (zs.avail_out == 0 && rc != Z_STREAM_END));
  }
  if (!any_input) throw StreamError("empty gzip stream", 0);
  if (!member_done) throw StreamError("truncated gzip stream", consumed);
  xml.feed(nullptr, 0, true);
  return xml.stats();
}

ParsedArchive parse_archive(std::istream& source) {
  ParsedArchive result;
  result.stats = parse_archive(source, [&](PubRecord&& r) { result.records.push_back(std::move(r)); });
  return result;
}

std::string summarize(std::string_view archive_name, const IngestStats& stats) {
  std::string line(archive_name);
  line += ": " + std::to_string(stats.citations) + " citations, " + std::to_string(stats.emitted) +
          " records, " + std::to_string(stats.skipped) + " skipped";
  return line;
}

}  // namespace sciembed
