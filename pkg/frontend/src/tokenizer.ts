/**
 * Tokenization for hazard text: a boundary mark, CJK characters as single
 * tokens, latin/digit runs as words, any other non-space symbol on its own.
 */

export const BOUNDARY_TOKEN = "[CLS]";

const TOKEN_PATTERN = /[一-鿿]|[a-z0-9]+|[^\s]/gu;

export interface Tokenization {
  tokens: string[];
  truncated: boolean;
}

export function tokenize(text: string, maxLen: number): Tokenization {
  const matches = text.toLowerCase().match(TOKEN_PATTERN) ?? [];
  const tokens = [BOUNDARY_TOKEN, ...matches];
  if (tokens.length > maxLen) {
    return { tokens: tokens.slice(0, maxLen), truncated: true };
  }
  return { tokens, truncated: false };
}
