public class BaseCell {
    public void tick() { }
}
