// Copyright 2026 The memaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include "memaudit/random.hpp"
#include "memaudit/tokenizer.hpp"

namespace memaudit {
namespace {

TEST(ByteTokenizer, EmptyText) {
  EXPECT_TRUE(ByteTokenizer().encode("").empty());
}

TEST(ByteTokenizer, IdentityMapping) {
  EXPECT_EQ(ByteTokenizer().encode("AB"), (TokenSeq{65, 66}));
  EXPECT_EQ(ByteTokenizer().vocab_size(), 256u);
}

TEST(ByteTokenizer, RoundTripsRandomStrings) {
  ByteTokenizer tok;
  Rng rng(17);
  for (int i = 0; i < 1000; ++i) {
    std::string s(rng.below(80), '\0');
    for (char& c : s) c = static_cast<char>(rng.below(256));
    const TokenSeq ids = tok.encode(s);
    ASSERT_EQ(ids.size(), s.size());
    for (Token t : ids) ASSERT_LT(t, 256u);
    ASSERT_EQ(tok.decode(ids), s);
  }
}

TEST(AlphabetTokenizer, DefaultHas64Ids) {
  const auto tok = AlphabetTokenizer::Default();
  EXPECT_EQ(tok.vocab_size(), 64u);
  const TokenSeq ids = tok.encode("a Z9");
  for (Token t : ids) {
    EXPECT_GE(t, 1u);
    EXPECT_LT(t, 64u);
  }
  EXPECT_EQ(tok.decode(ids), "a Z9");
}

TEST(AlphabetTokenizer, RejectsUnknownCharacters) {
  EXPECT_THROW(AlphabetTokenizer::Default().encode("a-b"), std::invalid_argument);
  EXPECT_THROW(AlphabetTokenizer("aa"), std::invalid_argument);
  EXPECT_THROW(AlphabetTokenizer("ab").decode({0}), std::invalid_argument);
}

TEST(MakeTokenizer, RebuildsFromDescriptor) {
  const auto tok = AlphabetTokenizer("xyz ");
  const auto rebuilt = make_tokenizer(tok.descriptor());
  EXPECT_EQ(rebuilt->descriptor(), tok.descriptor());
  EXPECT_EQ(rebuilt->encode("zy x"), tok.encode("zy x"));
  EXPECT_EQ(make_tokenizer("byte")->vocab_size(), 256u);
  EXPECT_EQ(make_tokenizer("alphabet")->descriptor(), AlphabetTokenizer::Default().descriptor());
  EXPECT_THROW(make_tokenizer("bpe"), std::invalid_argument);
}

}  // namespace
}  // namespace memaudit
