// Ledger explorer: committed blocks with expandable transaction detail.

import { BlockRow } from "../api.js";
import { escapeHtml, shortHash } from "../format.js";

export function renderBlocks(container: HTMLElement, blocks: BlockRow[], tipHash: string): void {
  const rows = blocks
    .slice()
    .reverse()
    .map((b) => {
      const txs = b.tx_list
        .map(
          (tx) => `
          <div class="tx" data-tx="${tx.tx_id}">
            <code>${shortHash(tx.tx_id)}</code>
            <b>${escapeHtml(String(tx.payload.kind))}</b>
            from ${escapeHtml(tx.submitter)} @ t${tx.timestamp}
            <pre class="payload">${escapeHtml(JSON.stringify(tx.payload, null, 1))}</pre>
          </div>`,
        )
        .join("");
      return `
        <details class="block" data-block="${b.height}">
          <summary>
            <b>#${b.height}</b>
            <code>${shortHash(b.block_hash)}</code>
            proposer ${escapeHtml(b.proposer)},
            ${b.endorsements.length} endorsements,
            ${b.tx_list.length} txs
          </summary>
          ${txs || '<div class="empty">genesis</div>'}
        </details>`;
    })
    .join("");
  container.innerHTML = `
    <div class="tip">tip <code data-tip-hash>${shortHash(tipHash, 20)}</code></div>
    ${rows}`;
}
