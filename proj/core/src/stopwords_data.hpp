#pragma once

namespace eileen::detail {

/// Contents of data/stopwords.txt, embedded at build time.
extern char const* const kBuiltinStopwords;

}  // namespace eileen::detail
