/**
 * Typed client for the paperstruct HTTP API.
 *
 * The shapes below mirror the served JSON exactly; the reader is a pure
 * view over these responses and never re-derives server-side results.
 */

export interface Span {
  block_id: string;
  start: number;
  end: number;
}

export interface CitationMark {
  id: string;
  span: Span;
  target_ref_ids: string[];
  display_number: number | null;
  resolved: boolean;
}

export interface Block {
  id: string;
  kind: string;
  text: string;
  marks: CitationMark[];
}

export interface Section {
  id: string;
  level: number;
  heading: string;
  deep: boolean;
  blocks: Block[];
  children: Section[];
}

export interface RefPerson {
  surname: string;
  given: string;
  structured: boolean;
}

export interface Reference {
  id: string;
  original_number: number;
  authors: RefPerson[];
  year: string | null;
  title: string | null;
  source_venue: string | null;
  doi: string | null;
}

export interface Article {
  id: string;
  title: string;
  authors: RefPerson[];
  abstract: Block[];
  sections: Section[];
  references: Reference[];
  figures: string[];
  provenance: {
    article_id: string;
    format_tag: string;
    source_name: string;
    sha256: string;
  };
}

export interface ArticleRow {
  id: string;
  slug: string;
  title: string;
  authors: string[];
}

export interface TocEntry {
  kind: string;
  section_id: string;
  level: number;
  label: string;
  targets: Span[];
  flags: string[];
  children: TocEntry[];
}

/**
 * Served fisheye view. `entries` is the exact sequence of visible panel
 * rows: selecting a section promotes its descendants to this top level,
 * so the client renders the array as-is and never walks `children`.
 */
export interface TocView {
  entries: TocEntry[];
  selected: string | null;
}

export type ReferenceMode = "appearance" | "alphabetical";

export interface ReferenceListing {
  article_id: string;
  mode: ReferenceMode;
  order: Reference[];
  /** old display number (as string key) -> new display number */
  renumber_map: Record<string, number>;
  warnings: { code: string; message: string }[];
}

export interface CitationLink {
  id: string;
  citing_article_id: string;
  citing_mark_id: string;
  anchor_id: string;
  role: string;
}

export interface BacklinkListing {
  article_id: string;
  backlinks: CitationLink[];
}

export interface ContextEntry {
  kind: string;
  span: Span | null;
  element_id: string | null;
  excerpt: string;
}

export interface ContextSummary {
  anchor_id: string;
  entries: ContextEntry[];
}

export interface ApiClient {
  listArticles(): Promise<ArticleRow[]>;
  getArticle(key: string): Promise<Article>;
  getToc(key: string, selected?: string | null): Promise<TocView>;
  getReferences(key: string, order: ReferenceMode): Promise<ReferenceListing>;
  getBacklinks(key: string): Promise<BacklinkListing>;
  getAnchorContext(anchorId: string): Promise<ContextSummary>;
}

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly errorName: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class HttpApiClient implements ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: typeof fetch = fetch,
  ) {}

  private async get<T>(path: string, query?: Record<string, string>): Promise<T> {
    const url = new URL(path, this.baseUrl);
    for (const [key, value] of Object.entries(query ?? {})) {
      url.searchParams.set(key, value);
    }
    const resp = await this.fetchImpl(url);
    if (!resp.ok) {
      const body = (await resp.json().catch(() => ({}))) as {
        error?: string;
        message?: string;
      };
      throw new ApiError(
        resp.status,
        body.error ?? "HttpError",
        body.message ?? `GET ${path} failed with ${resp.status}`,
      );
    }
    return (await resp.json()) as T;
  }

  async listArticles(): Promise<ArticleRow[]> {
    const body = await this.get<{ articles: ArticleRow[] }>("/articles");
    return body.articles;
  }

  getArticle(key: string): Promise<Article> {
    return this.get(`/articles/${encodeURIComponent(key)}`);
  }

  getToc(key: string, selected?: string | null): Promise<TocView> {
    const query = selected ? { selected } : undefined;
    return this.get(`/articles/${encodeURIComponent(key)}/toc`, query);
  }

  getReferences(key: string, order: ReferenceMode): Promise<ReferenceListing> {
    return this.get(`/articles/${encodeURIComponent(key)}/references`, { order });
  }

  getBacklinks(key: string): Promise<BacklinkListing> {
    return this.get(`/articles/${encodeURIComponent(key)}/backlinks`);
  }

  getAnchorContext(anchorId: string): Promise<ContextSummary> {
    return this.get(`/anchors/${encodeURIComponent(anchorId)}/context`);
  }
}

export interface LinkTarget {
  anchorId: string;
  citedArticleId: string;
  role: string;
}

/**
 * Map every citation mark of `citingArticleId` to its anchor link.
 *
 * Links are only exposed as backlinks of the cited article, so the index
 * is assembled by scanning the backlinks of every article in the library.
 */
export async function buildCitationLinkIndex(
  api: ApiClient,
  citingArticleId: string,
): Promise<Map<string, LinkTarget>> {
  const index = new Map<string, LinkTarget>();
  for (const row of await api.listArticles()) {
    const listing = await api.getBacklinks(row.slug);
    for (const link of listing.backlinks) {
      if (link.citing_article_id === citingArticleId) {
        index.set(link.citing_mark_id, {
          anchorId: link.anchor_id,
          citedArticleId: listing.article_id,
          role: link.role,
        });
      }
    }
  }
  return index;
}
