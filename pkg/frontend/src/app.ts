/**
 * Application shell: wires the editor, live preview and instrument browser
 * panes to one service client. The preview refreshes itself after every
 * successful save.
 */

import { ApiClient } from "./api.js";
import { BrowserView } from "./browserView.js";
import { el } from "./dom.js";
import { EditorView } from "./editorView.js";
import { PreviewView } from "./previewView.js";
import { EditorSession } from "./session.js";

export interface App {
  session: EditorSession;
  editor: EditorView;
  preview: PreviewView;
  browser: BrowserView;
  openGrid(className: string, attrName: string): Promise<void>;
}

export function createApp(root: HTMLElement, api: ApiClient): App {
  const session = new EditorSession();
  const editorRoot = el("section", { class: "pane editor-pane" });
  const previewRoot = el("section", { class: "pane preview-pane" });
  const browserRoot = el("section", { class: "pane browser-pane" });
  root.append(editorRoot, previewRoot, browserRoot);

  const editor = new EditorView(editorRoot, api, session);
  const preview = new PreviewView(previewRoot, api, session);
  const browser = new BrowserView(browserRoot, api);
  editor.onSaved = () => void preview.refresh();

  return {
    session,
    editor,
    preview,
    browser,
    async openGrid(className: string, attrName: string): Promise<void> {
      const doc = await api.getGrid(className, attrName);
      session.loadGrid(className, attrName, doc);
      editor.render();
      await preview.loadInstruments();
    },
  };
}

export function bootstrap(): void {
  const mount = document.getElementById("app");
  if (!mount) return;
  const base = mount.dataset.api ?? "http://127.0.0.1:8080";
  const app = createApp(mount, new ApiClient(base));
  void app.browser.load();
}
