/** UI-side application state: current matrix, provenance panel, episode
 * chat, and the relevance-label flow.
 *
 * Mutations go through the API and the affected state is refreshed in the
 * same call, so a label click updates strip fades within one refresh cycle
 * and a provenance click lands on the selected node's matrix.
 */

import type {
  CommlensClient,
  EpisodeTranscript,
  LevelStatePayload,
  MatrixResponse,
  ProvenanceGraph,
} from "./api.js";
import type { ViewName } from "./views.js";

export class AppController {
  matrix: MatrixResponse | null = null;
  provenance: ProvenanceGraph | null = null;
  transcript: EpisodeTranscript | null = null;
  currentNode = 0;

  constructor(private client: CommlensClient) {}

  async refreshMatrix(view: ViewName): Promise<MatrixResponse> {
    this.matrix = await this.client.matrix(this.currentNode, view);
    return this.matrix;
  }

  async refreshProvenance(): Promise<ProvenanceGraph> {
    this.provenance = await this.client.provenanceGraph();
    this.currentNode = this.provenance.currentId;
    return this.provenance;
  }

  /** Commit edited level properties; creates (and moves to) a new node. */
  async applyFilters(levels: LevelStatePayload[], view: ViewName): Promise<void> {
    const { nodeId } = await this.client.commitFilters(levels);
    this.currentNode = nodeId;
    await this.refreshMatrix(view);
    await this.refreshProvenance();
  }

  /** Click a provenance node: navigate server-side, then re-fetch. */
  async navigateTo(nodeId: number, view: ViewName): Promise<void> {
    await this.client.navigate(nodeId);
    this.currentNode = nodeId;
    await this.refreshMatrix(view);
    await this.refreshProvenance();
  }

  async toggleStar(nodeId: number): Promise<void> {
    await this.client.star(nodeId);
    await this.refreshProvenance();
  }

  async openEpisode(episodeId: string): Promise<EpisodeTranscript> {
    this.transcript = await this.client.episode(episodeId);
    return this.transcript;
  }

  /** Relevance button click. Applies the returned fade factors to the
   * matrix in place - no extra round trip needed for the fade update. */
  async labelEpisode(episodeId: string, label: "relevant" | "irrelevant"): Promise<boolean> {
    const res = await this.client.labelEpisode(episodeId, label);
    if (this.matrix) {
      for (const cell of this.matrix.cells) {
        for (const ep of cell.episodes ?? []) {
          const fade = res.fadeFactors[ep.episodeId];
          if (fade !== undefined) ep.fadeFactor = fade;
        }
      }
    }
    return res.modelTrained;
  }
}
