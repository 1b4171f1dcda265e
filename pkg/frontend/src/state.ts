/**
 * Reader view-model: holds the displayed article plus the navigation
 * state driven by the TOC panel, the reference-order toggle, and
 * citation pop-ups. All data comes from the HTTP API; the only
 * client-side transformation is applying the served renumber map.
 */

import type {
  ApiClient,
  Article,
  ContextEntry,
  LinkTarget,
  ReferenceListing,
  ReferenceMode,
  Span,
  TocEntry,
  TocView,
} from "./api.js";
import { buildCitationLinkIndex } from "./api.js";
import { findMark, findSection, spanInArticle, walkMarks } from "./article.js";

/** Panel arrangement: document body center, controls right, TOC below. */
export const LAYOUT = Object.freeze({
  body: "center",
  controls: "right",
  toc: "lower-panel",
} as const);

export type ScrollTarget =
  | { kind: "section"; sectionId: string }
  | { kind: "span"; span: Span }
  | { kind: "reference"; refId: string };

export interface PopupView {
  anchorId: string;
  citedArticleId: string;
  entries: ContextEntry[];
}

export interface ReaderState {
  articleId: string;
  article: Article;
  toc: TocView;
  tocSelected: string | null;
  referenceMode: ReferenceMode;
  references: ReferenceListing;
  scrollTarget: ScrollTarget | null;
  openPopup: PopupView | null;
  highlightedSpans: Span[];
}

export class Reader {
  state!: ReaderState;
  private currentSlug = "";
  private links = new Map<string, LinkTarget>();

  private constructor(private readonly api: ApiClient) {}

  static async open(api: ApiClient, key: string): Promise<Reader> {
    const reader = new Reader(api);
    await reader.loadArticle(key);
    return reader;
  }

  private async loadArticle(key: string): Promise<void> {
    const rows = await this.api.listArticles();
    const row = rows.find((r) => r.slug === key || r.id === key);
    const slug = row?.slug ?? key;
    const article = await this.api.getArticle(slug);
    const toc = await this.api.getToc(slug);
    const references = await this.api.getReferences(slug, "appearance");
    this.links = await buildCitationLinkIndex(this.api, article.id);
    this.currentSlug = slug;
    this.state = {
      articleId: article.id,
      article,
      toc,
      tocSelected: null,
      referenceMode: "appearance",
      references,
      scrollTarget: null,
      openPopup: null,
      highlightedSpans: [],
    };
  }

  /**
   * TOC click. Section entries scroll to the heading; a level-1 click
   * additionally selects the section so the served fisheye view reveals
   * its subheadings. Block entries scroll to the goal span and put the
   * accent on every span the block covers.
   */
  async onTocClick(entry: TocEntry): Promise<void> {
    const state = this.state;
    const goal = entry.targets[0];
    if (goal !== undefined) {
      state.scrollTarget = { kind: "span", span: goal };
      state.highlightedSpans = [...entry.targets];
      return;
    }
    if (findSection(state.article, entry.section_id) === null) {
      // stale entry: refresh the view instead of erroring
      state.toc = await this.api.getToc(this.currentSlug, state.tocSelected);
      return;
    }
    state.scrollTarget = { kind: "section", sectionId: entry.section_id };
    state.highlightedSpans = [];
    if (entry.level === 1 && entry.section_id !== state.tocSelected) {
      state.toc = await this.api.getToc(this.currentSlug, entry.section_id);
      state.tocSelected = entry.section_id;
    }
  }

  /** Flip the reference ordering; a second toggle restores the first. */
  async onReferenceToggle(): Promise<void> {
    const state = this.state;
    if (state.article.references.length === 0) return;
    const next: ReferenceMode =
      state.referenceMode === "appearance" ? "alphabetical" : "appearance";
    state.references = await this.api.getReferences(this.currentSlug, next);
    state.referenceMode = next;
  }

  /**
   * Citation click. A mark linked to an anchor opens the context pop-up;
   * anything else falls back to scrolling the reference panel entry.
   */
  async onCitationClick(markId: string): Promise<void> {
    const state = this.state;
    const mark = findMark(state.article, markId);
    if (mark === null) return;
    const link = this.links.get(markId);
    if (link !== undefined) {
      try {
        const summary = await this.api.getAnchorContext(link.anchorId);
        state.openPopup = {
          anchorId: link.anchorId,
          citedArticleId: link.citedArticleId,
          entries: summary.entries,
        };
        return;
      } catch {
        // summary gone: show the reference entry instead
      }
    }
    const refId = mark.target_ref_ids[0];
    if (refId !== undefined && state.article.references.some((r) => r.id === refId)) {
      state.scrollTarget = { kind: "reference", refId };
    }
  }

  /** Follow a pop-up jump link into the cited article. */
  async jumpFromPopup(entry: ContextEntry): Promise<void> {
    const popup = this.state.openPopup;
    if (popup === null || entry.span === null) return;
    if (popup.citedArticleId !== this.state.articleId) {
      await this.loadArticle(popup.citedArticleId);
    }
    if (!spanInArticle(this.state.article, entry.span)) return;
    this.state.scrollTarget = { kind: "span", span: entry.span };
    this.state.openPopup = null;
  }

  closePopup(): void {
    this.state.openPopup = null;
  }
}

/**
 * Rows the TOC panel shows, in order. The service promotes the selected
 * section's descendants to the top level, so the served array is already
 * the visible sequence; `children` are structural echo only.
 */
export function visibleTocRows(state: ReaderState): TocEntry[] {
  return state.toc.entries;
}

/**
 * Displayed number for every inline citation mark, keyed by mark id.
 * Pure application of the served renumber map to the as-published
 * display numbers; opaque marks without a number are left out.
 */
export function visibleCitationNumbers(state: ReaderState): Map<string, number> {
  const map = state.references.renumber_map;
  const out = new Map<string, number>();
  for (const mark of walkMarks(state.article)) {
    if (mark.display_number === null) continue;
    out.set(mark.id, map[String(mark.display_number)] ?? mark.display_number);
  }
  return out;
}

export interface ReferenceRow {
  refId: string;
  number: number;
  label: string;
}

/** Reference panel rows in served order with served numbering. */
export function referencePanel(state: ReaderState): ReferenceRow[] {
  const map = state.references.renumber_map;
  return state.references.order.map((ref) => {
    const names = ref.authors.map((a) => a.surname).join(", ");
    const year = ref.year === null ? "" : ` (${ref.year})`;
    const title = ref.title === null ? "" : ` ${ref.title}`;
    return {
      refId: ref.id,
      number: map[String(ref.original_number)] ?? ref.original_number,
      label: `${names}${year}${title}`.trim(),
    };
  });
}

/**
 * Every navigation target the current view renders into the displayed
 * article. Pop-up jump links point into the cited article and are
 * validated against it when followed.
 */
export function renderedNavigationTargets(state: ReaderState): ScrollTarget[] {
  const targets: ScrollTarget[] = [];
  for (const entry of visibleTocRows(state)) {
    if (entry.targets.length > 0) {
      for (const span of entry.targets) targets.push({ kind: "span", span });
    } else {
      targets.push({ kind: "section", sectionId: entry.section_id });
    }
  }
  for (const mark of walkMarks(state.article)) {
    for (const refId of mark.target_ref_ids) {
      targets.push({ kind: "reference", refId });
    }
  }
  return targets;
}

export function targetExists(article: Article, target: ScrollTarget): boolean {
  switch (target.kind) {
    case "section":
      return findSection(article, target.sectionId) !== null;
    case "reference":
      return article.references.some((r) => r.id === target.refId);
    case "span":
      return spanInArticle(article, target.span);
  }
}
