/** Read-only walks over a served article tree. */

import type { Article, Block, CitationMark, Section, Span } from "./api.js";

export function* walkSections(sections: Section[]): Generator<Section> {
  for (const section of sections) {
    yield section;
    yield* walkSections(section.children);
  }
}

/** Abstract blocks first, then body blocks in document order. */
export function* walkBlocks(article: Article): Generator<Block> {
  yield* article.abstract;
  for (const section of walkSections(article.sections)) {
    yield* section.blocks;
  }
}

export function* walkMarks(article: Article): Generator<CitationMark> {
  for (const block of walkBlocks(article)) {
    yield* block.marks;
  }
}

export function findSection(article: Article, sectionId: string): Section | null {
  for (const section of walkSections(article.sections)) {
    if (section.id === sectionId) return section;
  }
  return null;
}

export function findBlock(article: Article, blockId: string): Block | null {
  for (const block of walkBlocks(article)) {
    if (block.id === blockId) return block;
  }
  return null;
}

export function findMark(article: Article, markId: string): CitationMark | null {
  for (const mark of walkMarks(article)) {
    if (mark.id === markId) return mark;
  }
  return null;
}

export function spanInArticle(article: Article, span: Span): boolean {
  const block = findBlock(article, span.block_id);
  if (block === null) return false;
  return span.start >= 0 && span.start <= span.end && span.end <= block.text.length;
}
