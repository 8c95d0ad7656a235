/** Small DOM construction helpers; no templating framework. */

type Child = Node | string;

export function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  ...children: Child[]
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [name, value] of Object.entries(attrs)) {
    node.setAttribute(name, value);
  }
  node.append(...children);
  return node;
}

export function clear(node: HTMLElement): void {
  while (node.firstChild) node.removeChild(node.firstChild);
}

/**
 * The one place a number becomes screen text. JavaScript's default
 * stringification is shortest-round-trip, so the text denotes exactly the
 * double received from the service; nothing is rounded or recomputed.
 */
export function showNumber(value: number): string {
  return String(value);
}
