public class Factory {
    public Renderer make() {
        Renderer r = new Renderer();
        return r;
    }
}
