#include "embias/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "embias/errors.hpp"

namespace embias {

namespace {

// Tokens are already lowercased when this runs.
bool is_url(std::string_view tok) {
  return tok.starts_with("http://") || tok.starts_with("https://") || tok.starts_with("www.");
}

bool valid_utf8(std::string_view s) {
  const auto* p = reinterpret_cast<const uint8_t*>(s.data());
  const auto n = static_cast<int32_t>(s.size());
  for (int32_t i = 0; i < n;) {
    UChar32 c;
    U8_NEXT(p, i, n, c);
    if (c < 0) return false;
  }
  return true;
}

bool is_mention(std::string_view tok) { return tok.size() > 1 && tok.front() == '@'; }

}  // namespace

std::string normalize_text(std::string_view text) {
  if (!valid_utf8(text)) throw ValidationError("invalid UTF-8 input");
  auto u = icu::UnicodeString::fromUTF8(icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status)) throw std::runtime_error("ICU NFC normalizer unavailable");
  icu::UnicodeString normalized = nfc->normalize(u, status);
  if (U_FAILURE(status)) throw ValidationError("unicode normalization failed");
  normalized.toLower(icu::Locale::getRoot());
  std::string out;
  normalized.toUTF8String(out);
  return out;
}

Sentence tokenize(std::string_view line) {
  Sentence tokens = split_tokens(normalize_text(line));
  for (auto& t : tokens) {
    if (is_url(t)) {
      t = kUrlToken;
    } else if (is_mention(t)) {
      t = kUserToken;
    }
  }
  return tokens;
}

}  // namespace embias
