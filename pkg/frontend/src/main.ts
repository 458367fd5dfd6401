import { ApiClient } from "./api.js";
import { Store } from "./store.js";
import { renderApp, type Actions } from "./render.js";

const api = new ApiClient("");
const store = new Store(api);
const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const actions: Actions = {
  select: (item) => store.select(item),
  setCategory: (c) => void store.setCategory(c),
  nextPage: () => void store.nextPage(),
  prevPage: () => void store.prevPage(),
  setText: (t) => store.setText(t),
  setMethod: (m) => store.setMethod(m),
  setK: (k) => store.setK(k),
  submit: () => void store.submit(),
  retry: () => void store.init(),
};

store.subscribe((state) => renderApp(root, state, actions));
void store.init();
