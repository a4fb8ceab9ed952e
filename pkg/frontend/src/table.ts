import { AnnotationController } from "./controller";
import type { AnnotationApi } from "./api";
import { draftEdits, RowState, TableState } from "./state";
import type { Label, Verdict } from "./types";

const LABELS: Label[] = ["prototype", "metaphor", "metonymy"];
const VERDICTS: Verdict[] = ["kept", "lost", "modified"];

export interface SearchLink {
  name: string;
  urlTemplate: string; // {word} is substituted
}

const DEFAULT_LINKS: SearchLink[] = [
  { name: "dictionary", urlTemplate: "https://en.wiktionary.org/wiki/{word}" },
];

/** Render the annotation table for the current state into the container. */
export function renderTable(
  container: HTMLElement,
  state: TableState,
  controller: AnnotationController,
  api: AnnotationApi,
  links: SearchLink[] = DEFAULT_LINKS,
): void {
  container.innerHTML = "";
  const heading = document.createElement("h2");
  heading.textContent = state.word;
  const wordKnown = document.createElement("input");
  wordKnown.type = "checkbox";
  wordKnown.checked = state.wordKnown;
  wordKnown.className = "word-known";
  wordKnown.addEventListener("change", () => {
    void controller.structuralEdit({ op: "mark_unknown", word_known: wordKnown.checked });
  });
  heading.appendChild(wordKnown);
  container.appendChild(heading);

  const table = document.createElement("table");
  table.className = "annotation-table";
  table.appendChild(headerRow());
  for (const row of state.rows) {
    table.appendChild(renderRow(row, controller, api));
  }
  container.appendChild(table);
  container.appendChild(renderFooter(state, controller, links));
}

function headerRow(): HTMLTableRowElement {
  const tr = document.createElement("tr");
  for (const column of ["ID", "Definition", "Label", "Connects to", "Features", "Tools"]) {
    const th = document.createElement("th");
    th.textContent = column;
    tr.appendChild(th);
  }
  return tr;
}

function renderRow(
  row: RowState,
  controller: AnnotationController,
  api: AnnotationApi,
): HTMLTableRowElement {
  const tr = document.createElement("tr");
  tr.dataset.sense = row.id;

  // ID cell: completeness colouring plus the known checkbox
  const idCell = document.createElement("td");
  idCell.className = row.complete ? "sense-id complete" : "sense-id incomplete";
  idCell.style.color = row.complete ? "green" : "red";
  const idText = document.createElement("span");
  idText.textContent = row.id;
  idCell.appendChild(idText);
  const known = document.createElement("input");
  known.type = "checkbox";
  known.className = "sense-known";
  known.checked = row.known;
  known.addEventListener("change", () => {
    void controller.structuralEdit({ op: "mark_unknown", sense: row.id, known: known.checked });
  });
  idCell.appendChild(known);
  tr.appendChild(idCell);

  tr.appendChild(definitionCell(row, api));
  tr.appendChild(labelCell(row, controller));
  tr.appendChild(connectsCell(row, controller));
  tr.appendChild(featuresCell(row, controller));
  tr.appendChild(toolsCell(row, controller));
  return tr;
}

function definitionCell(row: RowState, api: AnnotationApi): HTMLTableCellElement {
  const td = document.createElement("td");
  td.className = "definition";
  for (const token of row.definition.split(/(\s+)/)) {
    if (!token.trim()) {
      td.appendChild(document.createTextNode(token));
      continue;
    }
    const span = document.createElement("span");
    span.textContent = token;
    span.className = "gloss-term";
    span.addEventListener("mouseenter", () => {
      const lemma = token.toLowerCase().replace(/[^a-z'-]/g, "");
      if (!lemma) return;
      void api.gloss(lemma).then((gloss) => {
        if (!gloss) return; // unmatched words get no popup
        span.title = gloss.senses.map((s) => `${s.index}. ${s.definition}`).join("\n");
        span.classList.add("has-gloss");
      });
    });
    td.appendChild(span);
  }
  return td;
}

function labelCell(row: RowState, controller: AnnotationController): HTMLTableCellElement {
  const td = document.createElement("td");
  td.className = "label-cell";
  for (const label of LABELS) {
    const wrap = document.createElement("label");
    const radio = document.createElement("input");
    radio.type = "radio";
    radio.name = `label-${row.id}`;
    radio.value = label;
    radio.checked = row.label === label;
    radio.addEventListener("change", () => {
      controller.applyDraft((draft) => draftEdits.setLabel(draft, row.id, label));
    });
    wrap.appendChild(radio);
    wrap.appendChild(document.createTextNode(label));
    td.appendChild(wrap);
  }
  if (row.conduitVisible) {
    const wrap = document.createElement("label");
    wrap.className = "conduit-toggle";
    const checkbox = document.createElement("input");
    checkbox.type = "checkbox";
    checkbox.checked = row.conduit;
    checkbox.addEventListener("change", () => {
      controller.applyDraft((draft) => draftEdits.setConduit(draft, row.id, checkbox.checked));
    });
    wrap.appendChild(checkbox);
    wrap.appendChild(document.createTextNode("conduit"));
    td.appendChild(wrap);
  }
  return td;
}

function connectsCell(row: RowState, controller: AnnotationController): HTMLTableCellElement {
  const td = document.createElement("td");
  td.className = "connects-cell";
  if (row.parentOptions.length === 0) {
    return td;
  }
  const select = document.createElement("select");
  select.className = "connects-to";
  const blank = document.createElement("option");
  blank.value = "";
  blank.textContent = "(choose)";
  select.appendChild(blank);
  for (const option of row.parentOptions) {
    const el = document.createElement("option");
    el.value = option.id;
    el.textContent = option.id;
    el.disabled = !option.enabled; // invalid options are greyed out
    select.appendChild(el);
  }
  select.value = row.parent ?? "";
  select.addEventListener("change", () => {
    controller.applyDraft((draft) =>
      draftEdits.setParent(draft, row.id, select.value || null),
    );
  });
  td.appendChild(select);
  return td;
}

function featuresCell(row: RowState, controller: AnnotationController): HTMLTableCellElement {
  const td = document.createElement("td");
  td.className = "features-cell";

  if (row.featureEditorVisible) {
    for (const feature of row.features) {
      const input = document.createElement("input");
      input.type = "text";
      input.className = "feature-text";
      input.dataset.feature = String(feature.id);
      input.placeholder = "This thing ___";
      input.value = feature.text;
      input.addEventListener("change", () => {
        controller.applyDraft((draft) =>
          draftEdits.setFeatureText(draft, row.id, feature.id, input.value),
        );
      });
      td.appendChild(input);
    }
    const add = document.createElement("button");
    add.className = "add-feature";
    add.textContent = "add feature";
    add.addEventListener("click", () => {
      controller.applyDraft((draft) => draftEdits.addFeature(draft, row.id));
    });
    td.appendChild(add);
  }

  for (const judgement of row.judgements) {
    const block = document.createElement("div");
    block.className = "judgement";
    block.dataset.feature = String(judgement.featureId);
    const caption = document.createElement("span");
    caption.textContent = judgement.parentText;
    block.appendChild(caption);
    for (const verdict of VERDICTS) {
      const wrap = document.createElement("label");
      const radio = document.createElement("input");
      radio.type = "radio";
      radio.name = `judgement-${row.id}-${judgement.featureId}`;
      radio.value = verdict;
      radio.checked = judgement.verdict === verdict;
      radio.addEventListener("change", () => {
        controller.applyDraft((draft) =>
          draftEdits.setVerdict(draft, row.id, judgement.featureId, verdict, judgement.parentText),
        );
      });
      wrap.appendChild(radio);
      wrap.appendChild(document.createTextNode(verdict));
      block.appendChild(wrap);
    }
    if (judgement.showTextBox) {
      const box = document.createElement("input");
      box.type = "text";
      box.className = "modified-text";
      box.value = judgement.modifiedText ?? "";
      box.addEventListener("change", () => {
        controller.applyDraft((draft) =>
          draftEdits.setModifiedText(draft, row.id, judgement.featureId, box.value),
        );
      });
      block.appendChild(box);
    }
    td.appendChild(block);
  }
  return td;
}

function toolsCell(row: RowState, controller: AnnotationController): HTMLTableCellElement {
  const td = document.createElement("td");
  td.className = "tools-cell";
  if (row.virtual) {
    const del = document.createElement("button");
    del.className = "delete-virtual";
    del.textContent = "delete";
    del.addEventListener("click", () => {
      void controller.structuralEdit({ op: "delete_virtual", id: row.id });
    });
    td.appendChild(del);
  } else if (row.splitHalf) {
    const merge = document.createElement("button");
    merge.className = "merge-sense";
    merge.textContent = "re-merge";
    merge.addEventListener("click", () => {
      void controller.structuralEdit({ op: "merge", sense: row.id });
    });
    td.appendChild(merge);
  } else {
    const split = document.createElement("button");
    split.className = "split-sense";
    split.textContent = "split";
    split.addEventListener("click", () => {
      void controller.structuralEdit({
        op: "split",
        sense: row.id,
        def_a: row.definition,
        def_b: row.definition,
      });
    });
    td.appendChild(split);
  }
  return td;
}

function renderFooter(
  state: TableState,
  controller: AnnotationController,
  links: SearchLink[],
): HTMLElement {
  const footer = document.createElement("div");
  footer.className = "footer";

  const addVirtual = document.createElement("button");
  addVirtual.className = "add-virtual";
  addVirtual.textContent = "add virtual sense";
  addVirtual.addEventListener("click", () => {
    void controller.structuralEdit({ op: "add_virtual", definition: "" });
  });
  footer.appendChild(addVirtual);

  const guidelines = document.createElement("a");
  guidelines.className = "guidelines";
  guidelines.href = "guidelines.html";
  guidelines.target = "_blank";
  guidelines.textContent = "guidelines";
  footer.appendChild(guidelines);

  for (const link of links) {
    const anchor = document.createElement("a");
    anchor.className = "search-link";
    anchor.href = link.urlTemplate.replace("{word}", encodeURIComponent(state.word));
    anchor.target = "_blank";
    anchor.textContent = `search ${link.name}`;
    footer.appendChild(anchor);
  }

  const submit = document.createElement("button");
  submit.className = "submit";
  submit.textContent = "submit";
  submit.disabled = !state.submitEnabled; // mirrors the server's gate
  submit.addEventListener("click", () => {
    void controller.submit();
  });
  footer.appendChild(submit);
  return footer;
}
